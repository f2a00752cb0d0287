import csv
import math
import os

import numpy as np
import pytest

from acns import cli
from acns.config import OUTPUT_DIR_ENV, RunConfig, serialize_config
from acns.runner import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, SERIES_COLUMNS, decay, simulate
from acns.snapshot import snapshot_read

SMALL = dict(nx=16, ny=16, dt=1e-3, t_end=0.01, output_every=5)


def _read_series(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_equilibrium_run_is_constant(tmp_path):
    res = simulate(RunConfig(ic="equilibrium", **SMALL), str(tmp_path))
    assert res.status == EXIT_OK
    rows = _read_series(tmp_path / "series.csv")
    assert tuple(rows[0]) == SERIES_COLUMNS
    assert len(rows) == 1 + 3
    assert all(float(v) == 0.0 for v in res.column("e_total"))
    assert sorted(os.listdir(tmp_path)) == ["series.csv", "snap_0000000.acns", "snap_0000005.acns",
                                            "snap_0000010.acns"]
    final = snapshot_read(tmp_path / "snap_0000010.acns")
    assert final.time == pytest.approx(0.01)


def test_runs_are_deterministic(tmp_path):
    cfg = RunConfig(ic="random_perturbation", ic_velocity=0.05, ic_amplitude=0.3, seed=7, **SMALL)
    simulate(cfg, str(tmp_path / "a"))
    simulate(cfg, str(tmp_path / "b"))
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bubble_run_decreases_energy(tmp_path):
    res = simulate(RunConfig(**SMALL), str(tmp_path), write_snapshots=False)
    e = res.column("e_total")
    assert all(b < a for a, b in zip(e, e[1:]))
    assert max(res.column("div_max")) < 1e-6
    assert all(r < 0 for r in res.column("balance_residual")[1:])
    assert math.isnan(res.rows[0]["balance_residual"])


def test_failure_flushes_last_good(tmp_path):
    cfg = RunConfig(poisson_tol=1e-14, poisson_max_iter=1, **SMALL)
    res = simulate(cfg, str(tmp_path))
    assert res.status == EXIT_FAILED
    assert "step 1" in res.error
    last = snapshot_read(tmp_path / "last_good.acns")
    assert last.time == 0.0


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    res = simulate(RunConfig(ic="equilibrium", output_dir="ignored", **SMALL), write_snapshots=False)
    assert res.status == EXIT_OK
    assert (tmp_path / "env" / "series.csv").exists()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = simulate(RunConfig(ic="equilibrium", **SMALL), str(blocker / "sub"))
    assert res.status == EXIT_CONFIG


def test_decay_fit_on_small_run(tmp_path):
    cfg = RunConfig(ic="perturbed_equilibrium", nx=16, ny=16, dt=1e-3, t_end=0.05, output_every=2)
    res, fit = decay(cfg, str(tmp_path))
    assert res.status == EXIT_OK
    assert fit.rate > 0 and fit.r_squared > 0.9


def _conf(tmp_path, **kw):
    path = tmp_path / "run.conf"
    path.write_text(serialize_config(RunConfig(**kw)))
    return str(path)


def test_cli_run_and_check(tmp_path, capsys):
    conf = _conf(tmp_path, ic="bubble", **SMALL)
    out = str(tmp_path / "out")
    assert cli.main(["run", conf, "-o", out]) == EXIT_OK
    assert "wrote 3 rows" in capsys.readouterr().out
    assert cli.main(["check", os.path.join(out, "snap_0000010.acns"), "-c", conf]) == EXIT_OK
    text = capsys.readouterr().out
    assert "e_total =" in text and "div_max =" in text


def test_cli_invalid_config(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("rho1 = 3\nrho2 = 1\n")
    out = tmp_path / "out"
    assert cli.main(["run", str(bad), "-o", str(out)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert not out.exists()
    assert cli.main(["run", str(tmp_path / "missing.conf")]) == EXIT_CONFIG


def test_cli_check_bad_snapshot(tmp_path, capsys):
    bad = tmp_path / "bad.acns"
    bad.write_text("ACNS 9 4 4 1 1 0\n")
    assert cli.main(["check", str(bad)]) == EXIT_CONFIG
    assert "unsupported" in capsys.readouterr().err


def test_cli_decay(tmp_path, capsys):
    conf = _conf(tmp_path, ic="perturbed_equilibrium", nx=16, ny=16, dt=1e-3, t_end=0.05, output_every=2)
    assert cli.main(["decay", conf, "-o", str(tmp_path / "d")]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("c = ") and "r2 = " in text


def test_cli_failed_run(tmp_path, capsys):
    conf = _conf(tmp_path, poisson_tol=1e-14, poisson_max_iter=1, **SMALL)
    assert cli.main(["run", conf, "-o", str(tmp_path / "f")]) == EXIT_FAILED
    assert (tmp_path / "f" / "last_good.acns").exists()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "acns", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for name in ("run", "decay", "verify", "check"):
        assert name in proc.stdout


def test_series_values_parse(tmp_path):
    simulate(RunConfig(ic="equilibrium", **SMALL), str(tmp_path), write_snapshots=False)
    rows = _read_series(tmp_path / "series.csv")
    values = np.array([[float(x) for x in r] for r in rows[1:]])
    assert values.shape == (3, len(SERIES_COLUMNS))
