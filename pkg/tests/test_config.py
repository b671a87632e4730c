import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radm.config import DEFAULTS, RunManifest, load_config, parse_config
from radm.errors import ConfigError


def test_empty_file_gives_defaults():
    s = parse_config("")
    cfg = s.solver
    assert (cfg.grid_n, cfg.nu, cfg.dt, cfg.t_end) == (32, 0.02, 1e-3, 0.5)
    assert (cfg.filter.alpha, cfg.filter.theta, cfg.filter.deconv_order) == (0.25, 0.5, 4)
    assert (cfg.ic_preset, cfg.ic_seed, cfg.forcing_preset, cfg.model_mode) == ("taylor_green_2d", 7, "none", "radm")
    assert cfg.cfl_safety == 0.5 and s.sample_every == 1


def test_comments_and_whitespace():
    s = parse_config("# header\n\n  nu = 0.05   # viscosity\nic=abc_flow\n")
    assert s.solver.nu == 0.05 and s.solver.ic_preset == "abc_flow"


def test_zeroth_order_config():
    s = parse_config("deconv_n=0\nalpha=0.25\n")
    assert s.solver.filter.deconv_order == 0 and s.solver.filter.alpha == 0.25


@pytest.mark.parametrize("text,key,line", [
    ("theta=1.5", "theta", 1),
    ("nu=0.1\nnu=-1", "nu", 2),
    ("\ngrid_n=33", "grid_n", 2),
    ("grid_n=abc", "grid_n", 1),
    ("dt=fast", "dt", 1),
    ("ic=vortex", "ic", 1),
    ("model_mode=les", "model_mode", 1),
    ("forcing=wind", "forcing", 1),
    ("colour=blue", "colour", 1),
    ("# c\nsample_every=0", "sample_every", 2),
    ("nu=nan", "nu", 1),
    ("nu=0\nforcing=steady_trig", "nu", 1),
])
def test_errors_carry_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == key
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_missing_equals():
    with pytest.raises(ConfigError) as err:
        parse_config("nu 0.1")
    assert err.value.line == 1


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("nu=0.1\nnu=0.2")


@given(st.floats(0, 10, allow_nan=False), st.floats(1e-6, 1, allow_nan=False), st.floats(0, 1))
def test_manifest_round_trip(nu, dt, theta):
    s = parse_config(f"nu={nu!r}\ndt={dt!r}\ntheta={theta!r}\nforcing=none")
    m = RunManifest.create(s)
    back = RunManifest.from_json(m.to_json())
    assert back.settings.solver == s.solver
    assert back.settings.as_flat() == s.as_flat()
    assert back.created_at == m.created_at


def test_manifest_layout(tmp_path):
    m = RunManifest.create(parse_config("seed=3"))
    doc = json.loads(m.to_json())
    assert doc["schema_version"] == 1
    assert doc["grid"]["n_per_axis"] == 32
    assert set(doc["config"]) == set(DEFAULTS) - {"grid_n"}
    path = tmp_path / "manifest.json"
    m.write(path)
    assert load_config(path).solver == m.settings.solver


def test_manifest_rejects_other_schema():
    doc = json.loads(RunManifest.create(parse_config("")).to_json())
    doc["schema_version"] = 2
    with pytest.raises(ConfigError):
        RunManifest.from_json(json.dumps(doc))


def test_load_key_value_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("grid_n=16\n", encoding="utf-8")
    assert load_config(p).grid_n == 16
