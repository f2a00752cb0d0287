import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acns.config import OUTPUT_DIR_ENV, ConfigError, RunConfig, load_config, parse_config, serialize_config


def test_empty_config_gives_defaults():
    assert parse_config("") == RunConfig()
    assert parse_config("# only a comment\n\n   \n") == RunConfig()


def test_keys_and_comments():
    cfg = parse_config("lambda = 0.02  # surface tension\nbranch = minus\nnx = 32\nic_width = none\n")
    assert cfg.lam == 0.02
    assert cfg.branch == "minus"
    assert cfg.nx == 32
    assert cfg.ic_width is None
    assert cfg.params().lam == 0.02
    assert cfg.grid().nx == 32


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("rho1 = 3\nrho2 = 1\n", 2, "rho1 < rho2 required"),
        ("rho2 = 1\nrho1 = 3\n", 2, "rho1 < rho2 required"),
        ("nx = 32\nfoo = 1\n", 2, "unknown key"),
        ("mu = abc\n", 1, "number"),
        ("nx = 3.5\n", 1, "integer"),
        ("mu = 1\nmu = 2\n", 2, "duplicate"),
        ("\n\nthis line has no equals\n", 3, "key = value"),
        ("epsilon = -1\n", 1, "epsilon"),
        ("dt = 0.0003\n", 1, "whole number"),
        ("t_end = 0.1\ndt = 0.03\n", 2, "whole number"),
        ("branch = sideways\n", 1, "branch"),
        ("mu = nan\n", 1, "finite"),
        ("ic = vortex\n", 1, "ic"),
        ("nx = 2\n", 1, "nx"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


def test_steps_and_derived_objects():
    cfg = RunConfig(t_end=0.01, dt=1e-3)
    assert cfg.steps == 10
    assert cfg.stepper().dt == 1e-3


@settings(max_examples=60, deadline=None)
@given(
    mu=st.floats(1e-3, 1e3),
    lam=st.floats(1e-4, 10.0),
    rho1=st.floats(0.1, 10.0),
    ratio=st.floats(1.01, 50.0),
    n=st.integers(4, 256),
    steps=st.integers(1, 10_000),
    branch=st.sampled_from(["plus", "minus"]),
    ic=st.sampled_from(["equilibrium", "bubble", "perturbed_equilibrium", "random_perturbation", "mms"]),
    width=st.one_of(st.none(), st.floats(1e-3, 1.0)),
)
def test_round_trip(mu, lam, rho1, ratio, n, steps, branch, ic, width):
    dt = 1e-4
    cfg = RunConfig(mu=mu, lam=lam, rho1=rho1, rho2=rho1 * ratio, nx=n, ny=n + 1, dt=dt, t_end=steps * dt,
                    branch=branch, ic=ic, ic_width=width)
    assert parse_config(serialize_config(cfg)) == cfg


def test_output_dir_env(monkeypatch, tmp_path):
    cfg = RunConfig(output_dir="from_config")
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert cfg.resolved_output_dir() == "from_config"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert cfg.resolved_output_dir() == str(tmp_path)


def test_load_config(tmp_path):
    path = tmp_path / "a.conf"
    path.write_text("nx = 16\nny = 16\n")
    assert load_config(path).nx == 16
