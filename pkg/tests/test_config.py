from pathlib import Path

import numpy as np
import pytest

from lvnlab.config import (CONFIGS, ConfigError, ProfileConfig, build_initial, config_echo, load_config,
                           parse_override)
from lvnlab.lattice import GridSpec

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    command = path.stem.split("_")[0]
    command = "region" if command == "res" else command
    cfg = load_config(command, path)
    assert isinstance(cfg, CONFIGS[command])


def test_defaults_without_file():
    for command, cls in CONFIGS.items():
        assert isinstance(load_config(command), cls)


def test_unknown_keys_rejected(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("n = 1\nbogus = 3\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config("propagate", p)
    with pytest.raises(ConfigError, match="colour"):
        load_config("propagate", None, ["initial.colour=1"])
    with pytest.raises(ConfigError):
        load_config("nope")


@pytest.mark.parametrize("override", [
    "n=3", "points_per_axis=7.5", "half_length=-1", "times=[]", "initial.profile='square'",
    "initial.width=0", "n='one'", "times=['soon']",
])
def test_bad_values_rejected(override):
    with pytest.raises(ConfigError):
        load_config("propagate", None, [override])


@pytest.mark.parametrize("command,override", [
    ("decay", "window=[4.0, 2.0]"), ("decay", "r1='x'"), ("region", "bound=1"),
    ("whitney", "method='magic'"), ("whitney", "j_range=[2, 1]"), ("strichartz", "triple=['1/2', '0']"),
    ("solve", "sign=5"), ("solve", "alpha=0"), ("solve", "steps=0"),
])
def test_command_specific_validation(command, override):
    with pytest.raises(ConfigError):
        load_config(command, None, [override])


def test_overrides_are_toml_literals():
    assert parse_override("a=1.5") == ("a", 1.5)
    assert parse_override("a=[1, 2]") == ("a", [1, 2])
    assert parse_override("a=true") == ("a", True)
    assert parse_override("a=hello") == ("a", "hello")
    with pytest.raises(ConfigError):
        parse_override("novalue")
    cfg = load_config("propagate", CONFIG_DIR / "propagate.toml", ["initial.width=2.0", "points_per_axis=32"])
    assert cfg.initial.width == 2.0 and cfg.points_per_axis == 32


def test_echo_reloads_to_same_config():
    cfg = load_config("solve", CONFIG_DIR / "solve.toml")
    echo = config_echo(cfg)
    items = [f"{k}={v!r}" if isinstance(v, str) else f"{k}={str(v).lower() if isinstance(v, bool) else v}"
             for k, v in echo.items() if not isinstance(v, dict)]
    items += [f"initial.{k}={v!r}" for k, v in echo["initial"].items()]
    again = load_config("solve", None, [i.replace("'", '"') for i in items])
    assert config_echo(again) == echo


def test_profiles():
    g = GridSpec(1, 16, 4.0)
    for name in ("gaussian", "product_gaussian", "plane_modulated", "random_smooth"):
        f = build_initial(g, ProfileConfig(profile=name, amplitude=0.5, xi0=1.0))
        assert f.values.shape == g.shape and np.isfinite(f.values).all()
        assert np.isclose(np.abs(f.values).max(), 0.5, rtol=0.05) or name != "random_smooth"
    prod = build_initial(g, ProfileConfig(profile="product_gaussian", xi0=0.7)).values
    assert np.linalg.matrix_rank(prod, tol=1e-10) == 1
    assert np.allclose(prod, prod.conj().T)


def test_random_profile_seeded():
    g = GridSpec(1, 16, 4.0)
    prof = ProfileConfig(profile="random_smooth")
    a, b = build_initial(g, prof, 3), build_initial(g, prof, 3)
    c = build_initial(g, prof, 4)
    assert np.array_equal(a.values, b.values)
    assert not np.allclose(a.values, c.values)
