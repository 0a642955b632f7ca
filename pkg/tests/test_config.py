"""
Tests for configuration files and flag merging
"""

import pytest

from conefix.config import COMMAND_DEFAULTS, build_config, load_config, parse_seed_range
from conefix.errors import DomainError, ScenarioError


def test_defaults_per_command():
    config = build_config("demo1d")
    assert config.mapping == "g"
    assert (config.tol, config.max_iter) == COMMAND_DEFAULTS["demo1d"]
    assert build_config("load-sim").tol == 1e-12


def test_flags_override_file_values(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("tol: 1.0e-6\nmax-iter: 50\nusers: 100\n")
    values = load_config(path)
    assert values == {"tol": 1e-6, "max_iter": 50, "users": 100}

    config = build_config("load-sim", values, {"users": 20, "stations": None})
    assert config.users == 20
    assert config.stations == 25
    assert config.tol == 1e-6
    assert config.max_iter == 50


def test_empty_config_file(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path) == {}


def test_config_file_errors(tmp_path):
    with pytest.raises(ScenarioError):
        load_config(tmp_path / "missing.yaml")

    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("tolerance: 1.0\n")
    with pytest.raises(DomainError):
        load_config(unknown)

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError):
        load_config(listing)


def test_parse_seed_range():
    assert parse_seed_range("0..19") == (0, 19)
    assert parse_seed_range("7") == (7, 7)
    assert parse_seed_range(3) == (3, 3)
    assert parse_seed_range([2, 4]) == (2, 4)
    with pytest.raises(DomainError):
        parse_seed_range("5..1")
    with pytest.raises(DomainError):
        parse_seed_range("a..b")


def test_box_values_are_listified():
    config = build_config("certify", {"mapping": "f1", "box_lo": 0.5, "box_hi": 1.5})
    assert config.box_lo == [0.5]
    assert config.box_hi == [1.5]


@pytest.mark.parametrize("command,values", [
    ("demo1d", {"tol": 0.0}),
    ("demo1d", {"max_iter": 0}),
    ("demo1d", {"norm": "l3"}),
    ("load-sim", {"layout": "hexagonal"}),
    ("load-sim", {"demand_scale": -1.0}),
    ("power-sim", {"power_users": 1}),
    ("power-sim", {"gamma_spread": [2.0, 1.0]}),
    ("certify", {"mapping": "f1"}),
    ("certify", {"mapping": "f1", "box_lo": [1.0], "box_hi": [1.0, 2.0]}),
    ("certify", {"mapping": "f1", "box_lo": [1.0], "box_hi": [2.0], "mu": 1.5}),
])
def test_invalid_settings(command, values):
    with pytest.raises(DomainError):
        build_config(command, values)


def test_mapping_source_must_be_unique(tmp_path):
    with pytest.raises(ScenarioError):
        build_config("spectral-radius", {})
    scenario = tmp_path / "s.json"
    scenario.write_text("{}")
    with pytest.raises(ScenarioError):
        build_config("spectral-radius", {"mapping": "f1", "scenario": str(scenario)})
    with pytest.raises(ScenarioError):
        build_config("load-sim", {"scenario": str(tmp_path / "missing.json")})
