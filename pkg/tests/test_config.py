import json

import pytest

from synchrony.config import load_config, parse_config, scenario_to_dict
from synchrony.errors import ConfigError
from synchrony.scenario import run_scenario

import pathlib

RECIPES = pathlib.Path(__file__).resolve().parent.parent / "recipes"


def test_defaults():
    sc = parse_config("").scenario()
    assert sc.horizon == 50 and sc.seed == 0
    assert sc.network.topology == "small-world"
    assert sc.driver.kind == "constant"


@pytest.mark.parametrize("name", sorted(p.name for p in RECIPES.glob("*.yaml")))
def test_recipes_parse(name):
    cfg = load_config(RECIPES / name)
    cfg.scenario()
    if "sweep" in cfg.data:
        assert cfg.sweep().replicates >= 1
    if "calibration" in cfg.data:
        assert cfg.calibration().n_draws > 0


def test_scenario_round_trip():
    cfg = load_config(RECIPES / "cycle_period16.yaml")
    sc = cfg.scenario()
    again = parse_config(json.dumps(scenario_to_dict(sc))).scenario()
    assert again == sc


def test_round_trip_other_laws():
    text = """
seed: 4
horizon: 12
network: {topology: ring, n: 8, d: 2}
population:
  thresholds: {law: explicit, values: [0.1, 0.2, 0.3, 0.4, 0.1, 0.2, 0.3, 0.4]}
  initial_actors: [0, 3]
driver: {kind: piecewise, table: [0.2, 0.8]}
activation: {kind: explicit, events: [[2, [1, 2]], [5, [7]]]}
linkage: {a_p: 0.1, b_p: 0.9, a_T: 0.0, b_T: 0.5}
"""
    sc = parse_config(text).scenario()
    assert parse_config(json.dumps(scenario_to_dict(sc))).scenario() == sc
    _, traj, sched = run_scenario(sc)
    assert traj.horizon == 12
    assert sched.at(5) == {7}


@pytest.mark.parametrize("text,line", [
    ("horizon: 0\n", 1),
    ("seed: 1\ngame:\n  alpha: -1\n", 3),
    ("network: {topology: lattice}\n", 1),
    ("seed: 1\npopulation:\n  active_fraction: 2\n", 3),
    ("game: {alpha: 0.1, gamma: 2}\n", 1),
    ("seed: [1\n", None),
])
def test_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as info:
        cfg = parse_config(text, "cfg.yaml")
        cfg.scenario()
    if line is not None:
        assert f"cfg.yaml:{line}:" in str(info.value)


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown"):
        parse_config("gamez: {}\n").scenario()


def test_sweep_errors():
    with pytest.raises(ConfigError):
        parse_config("seed: 1\n").sweep()
    with pytest.raises(ConfigError):
        parse_config("sweep: {axes: {zeta: [1]}}\n").sweep()
    with pytest.raises(ConfigError):
        parse_config("sweep: {axes: {alpha: []}}\n").sweep()


def test_manifest_is_accepted():
    doc = {"subcommand": "simulate", "config": {"seed": 9, "horizon": 7}, "seed": 9}
    cfg = parse_config(json.dumps(doc))
    assert cfg.manifest["subcommand"] == "simulate"
    assert cfg.scenario().horizon == 7


def test_with_seed():
    assert parse_config("seed: 1\n").with_seed(5).seed == 5


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
