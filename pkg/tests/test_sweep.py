import csv
import json
import math

import pytest

from synchrony.dynamics import ThresholdInit
from synchrony.errors import SweepSpecError, UnknownAxis
from synchrony.game import GameParams
from synchrony.scenario import NetworkRecipe, Scenario, derive_seed, run_scenario
from synchrony.sweep import SweepSpec, run_sweep, summarize, worker_count

ALPHA_BASE = Scenario(game=GameParams(0.3, 0.3, 0.2, 0.9), network=NetworkRecipe("small-world", 50, 5, 0.3),
                active_fraction=1.0, threshold_init=ThresholdInit.uniform(0, 0.5), initial_actors=1, horizon=50)


def test_alpha_sweep_rows_and_order():
    spec = SweepSpec({"alpha": [0.1, 0.3, 0.5]}, ALPHA_BASE, base_seed=1)
    res = run_sweep(spec)
    assert len(res.rows) == 3
    assert [r.params["alpha"] for r in res.rows] == [0.1, 0.3, 0.5]
    # one replicate per cell, so cells differ in network too; allow the 1-tick slack
    ticks = [r.sync_tick if r.sync else math.inf for r in res.rows]
    assert ticks[2] <= ticks[1] + 1 and ticks[1] <= ticks[0] + 1


def test_row_count_is_product():
    spec = SweepSpec([("d", [4, 6]), ("x", [0.1, 0.2, 0.3])], ALPHA_BASE, replicates=2, horizon=10)
    res = run_sweep(spec)
    assert len(res.rows) == 2 * 3 * 2
    assert [(r.cell_index, r.replicate) for r in res.rows[:3]] == [(0, 0), (0, 1), (1, 0)]
    assert all(len(r.pro) == 11 for r in res.rows)


def test_seeds_derived_per_cell():
    spec = SweepSpec({"alpha": [0.1, 0.3]}, ALPHA_BASE, replicates=2, base_seed=9)
    res = run_sweep(spec)
    assert [r.seed for r in res.rows] == [derive_seed(9, c, r) for c in range(2) for r in range(2)]


@pytest.mark.parametrize("axes", [{}, {"z": [1]}, {"alpha": []}, [("alpha", [1]), ("α", [2])]])
def test_spec_validation(axes):
    with pytest.raises(SweepSpecError):
        SweepSpec(axes, ALPHA_BASE)


def test_replicates_and_horizon_validation():
    with pytest.raises(SweepSpecError):
        SweepSpec({"alpha": [0.1]}, ALPHA_BASE, replicates=0)
    with pytest.raises(SweepSpecError):
        SweepSpec({"alpha": [0.1]}, ALPHA_BASE, horizon=0)


def test_aliases():
    spec = SweepSpec({"α": [0.1], "T": [8], "Ty": [0.3], "k": [0.5]}, ALPHA_BASE)
    assert spec.axis_names == ("alpha", "period_T", "threshold_init", "active_fraction")
    sc = spec.scenario(next(spec.cells()), 0)
    assert sc.game.alpha == 0.1
    assert sc.driver.period_T == 8
    assert sc.threshold_init.hi == 0.3
    assert sc.active_fraction == 0.5


def test_summarize_groups():
    spec = SweepSpec({"alpha": [0.1, 0.3, 0.5]}, ALPHA_BASE, replicates=2, base_seed=1)
    res = run_sweep(spec)
    table = summarize(res, "α")
    assert [row["alpha"] for row in table] == [0.1, 0.3, 0.5]
    assert all(row["runs"] == 2 for row in table)
    with pytest.raises(UnknownAxis):
        summarize(res, "z")


def test_errors_are_recorded():
    spec = SweepSpec({"x": [0.9, 0.5]}, ALPHA_BASE, horizon=5)
    res = run_sweep(spec)
    assert "DegenerateBeliefs" in res.rows[0].error
    assert res.rows[1].error is None
    table = summarize(res, "x")
    assert table[0]["errors"] == 1 and table[0]["sync_rate"] == 0.0
    assert math.isnan(table[0]["mean_final_pro"])


def test_rerun_and_workers_identical(tmp_path):
    spec = SweepSpec({"alpha": [0.1, 0.5], "d": [4, 6]}, ALPHA_BASE, replicates=2, horizon=20, base_seed=3)
    one = run_sweep(spec, workers=1)
    two = run_sweep(spec, workers=2)
    one.write_csv(tmp_path / "a.csv")
    two.write_csv(tmp_path / "b.csv")
    one.write_pro_csv(tmp_path / "pa.csv")
    two.write_pro_csv(tmp_path / "pb.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "pa.csv").read_bytes() == (tmp_path / "pb.csv").read_bytes()
    rows = list(csv.DictReader(open(tmp_path / "a.csv")))
    assert len(rows) == 8 and set(rows[0]) >= {"alpha", "d", "sync", "final_pro"}
    one.write_manifest(tmp_path / "m.json")
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["rows"] == 8 and "version" in doc


def test_worker_count(monkeypatch):
    monkeypatch.delenv("SYNCHRONY_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("SYNCHRONY_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    assert worker_count(0) == 1


def test_scenario_determinism():
    _, a, _ = run_scenario(ALPHA_BASE)
    _, b, _ = run_scenario(ALPHA_BASE)
    assert (a.actions == b.actions).all()
