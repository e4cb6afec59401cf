import math
from pathlib import Path

import pytest

from lrpkit.errors import ConfigError
from lrpkit.harness.config import KINDS, ExperimentConfig, load_config, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.conf")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    config = load_config(path)
    assert config.kind in KINDS


def test_values_are_decoded(tmp_path):
    config = load_config(write(tmp_path, "\n".join([
        "# comment",
        "kind = scaling",
        "kernel.d = 2",
        "kernel.alpha = 0.5",
        "grid.beta = 0.2",
        'grid.r = [8, "inf"]',
        "grid.L = [64, 128]",
        'run.out = "somewhere"',
        "options.tail = [1, 2, 4]",
        "options.label = plain words",
    ])))
    assert config.d == 2
    assert config.alpha == 0.5
    assert config.betas == (0.2,)
    assert config.radii == (8.0, math.inf)
    assert config.sides == (64, 128)
    assert config.out == "somewhere"
    assert config.option("tail") == [1, 2, 4]
    assert config.option("label") == "plain words"
    assert config.option("missing", 3) == 3


def test_bare_inf_radius(tmp_path):
    config = load_config(write(tmp_path, "kind = twopoint\ngrid.r = inf\n"))
    assert config.radii == (math.inf,)


def test_unknown_key_reports_line(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind = simulate\n\nkernel.dd = 1\n"))
    assert info.value.field == "kernel.dd"
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_wrong_type_reports_field(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, 'kind = simulate\nrun.n_replicas = "many"\n'))
    assert info.value.field == "run.n_replicas"
    assert info.value.line == 2


def test_range_errors_carry_line_numbers(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, "kind = simulate\nkernel.alpha = 2.5\n"))
    assert info.value.field == "kernel.alpha"
    assert info.value.line == 2


@pytest.mark.parametrize("values", [
    {},
    {"kind": "teleport"},
    {"kind": "simulate", "run.workers": "0"},
    {"kind": "simulate", "run.mode": "everything"},
    {"kind": "simulate", "grid.r": '["soon"]'},
    {"kind": "simulate", "run.seed": "true"},
])
def test_invalid_configs(values):
    with pytest.raises(ConfigError):
        parse_config(values)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.conf")


def test_hash_ignores_workers_but_not_seed():
    base = ExperimentConfig(kind="simulate", betas=(0.2,), sides=(64,))
    assert base.with_overrides(workers=7).config_hash() == base.config_hash()
    assert base.with_overrides(seed=5).config_hash() != base.config_hash()
    assert len(base.config_hash()) == 16


def test_echo_is_json_ready():
    echo = ExperimentConfig(kind="twopoint").echo()
    assert echo["radii"] == ["inf"]
    assert "workers" not in echo
