"""Text snapshots of a SimState.

Layout::

    ACNS 1 <nx> <ny> <lx> <ly> <time>
    u
    <ny lines of nx+1 values>
    v
    <ny+1 lines of nx values>
    p
    <ny lines of nx values>
    phi
    <ny lines of nx values>

Each line is one grid row (fixed y, increasing x). Values use 17 significant
digits, so reading a written state reproduces it bitwise. Ghost cells are not
stored; they are rebuilt from the boundary conditions on reading.
"""
from __future__ import annotations

import os

import numpy as np

from .grid import Grid, SimState

MAGIC = "ACNS"
VERSION = 1
SECTIONS = ("u", "v", "p", "phi")


class SnapshotError(ValueError):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _interiors(state: SimState):
    vel = state.velocity
    return {
        "u": vel.u[:, 1:-1],
        "v": vel.v[1:-1, :],
        "p": state.pressure[1:-1, 1:-1],
        "phi": state.phase[1:-1, 1:-1],
    }


def snapshot_write(state: SimState, path) -> None:
    """Write ``state``; the file is replaced atomically."""
    grid = state.grid
    if not state.is_finite():
        raise SnapshotError("refusing to write non-finite values")
    lines = [" ".join([MAGIC, str(VERSION), str(grid.nx), str(grid.ny), _fmt(grid.lx), _fmt(grid.ly), _fmt(state.time)])]
    for name, block in _interiors(state).items():
        lines.append(name)
        for j in range(block.shape[1]):
            lines.append(" ".join(_fmt(x) for x in block[:, j].tolist()))
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _parse_header(line: str):
    parts = line.split()
    if len(parts) != 7 or parts[0] != MAGIC:
        raise SnapshotError(f"malformed header {line.strip()!r}")
    try:
        version = int(parts[1])
    except ValueError:
        raise SnapshotError(f"malformed header {line.strip()!r}") from None
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    try:
        nx, ny = int(parts[2]), int(parts[3])
        lx, ly, time = (float(x) for x in parts[4:])
    except ValueError:
        raise SnapshotError(f"malformed header {line.strip()!r}") from None
    try:
        grid = Grid(nx, ny, lx, ly)
    except ValueError as exc:
        raise SnapshotError(f"invalid grid in header: {exc}") from None
    if not (np.isfinite(time) and time >= 0):
        raise SnapshotError("snapshot time must be finite and >= 0")
    return grid, time


def snapshot_read(path) -> SimState:
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SnapshotError("empty snapshot")
    grid, time = _parse_header(lines[0])
    shapes = {"u": (grid.nx + 1, grid.ny), "v": (grid.nx, grid.ny + 1), "p": (grid.nx, grid.ny), "phi": (grid.nx, grid.ny)}
    blocks = {}
    pos = 1
    for name in SECTIONS:
        if pos >= len(lines) or lines[pos].strip() != name:
            raise SnapshotError(f"expected section {name!r} at line {pos + 1}")
        pos += 1
        mx, my = shapes[name]
        rows = lines[pos:pos + my]
        if len(rows) != my:
            raise SnapshotError(f"section {name!r}: size mismatch, expected {my} rows, found {len(rows)}")
        try:
            data = [[float(tok) for tok in row.split()] for row in rows]
        except ValueError as exc:
            raise SnapshotError(f"section {name!r}: {exc}") from None
        if any(len(row) != mx for row in data):
            raise SnapshotError(f"section {name!r}: size mismatch, expected {mx} values per row")
        block = np.array(data, dtype=float).T
        if not np.isfinite(block).all():
            raise SnapshotError(f"section {name!r}: non-finite values")
        blocks[name] = block
        pos += my
    if any(line.strip() for line in lines[pos:]):
        raise SnapshotError("size mismatch: trailing data after the last section")
    vel = grid.velocity()
    vel.u[:, 1:-1] = blocks["u"]
    vel.v[1:-1, :] = blocks["v"]
    vel = grid.apply_bc_velocity(vel)
    p = grid.scalar()
    p[1:-1, 1:-1] = blocks["p"]
    phi = grid.scalar()
    phi[1:-1, 1:-1] = blocks["phi"]
    return SimState(grid, vel, grid.apply_bc_neumann(p), grid.apply_bc_neumann(phi), time)
