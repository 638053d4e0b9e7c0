import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synchrony.analysis import (
    detect_clusters,
    detect_sync,
    find_phase_transition,
    lemma2_premise,
    neighborhoods_overlap,
    run_theorem2,
    spread_contraction,
    stage_decompose,
    theorem1_premises,
    verify_contraction,
    verify_lemma2,
    verify_theorem1,
)
from synchrony.dynamics import SystemState, Trajectory
from synchrony.errors import NoTransition
from synchrony.game import GameParams
from synchrony.netgen import make_complete, make_regular_ring


def _traj_from_actions(actions, thresholds=None):
    A = np.asarray(actions, dtype=np.uint8)
    T = np.zeros(A.shape) if thresholds is None else np.asarray(thresholds, float)
    return Trajectory(np.ones(A.shape[1], np.int8), A, T, np.zeros(A.shape))


def test_sync_from_start():
    rep = detect_sync(_traj_from_actions(np.ones((5, 4))))
    assert rep.action_sync_tick == 0
    assert rep.threshold_sync_tick == 0


def test_sync_never():
    rep = detect_sync(_traj_from_actions(np.zeros((5, 4)), np.tile([0.0, 1.0, 0.0, 1.0], (5, 1))))
    assert rep.action_sync_tick is None
    assert rep.threshold_sync_tick is None
    with pytest.raises(ValueError):
        detect_sync(_traj_from_actions(np.zeros((2, 2))), eps=0)


@settings(max_examples=30)
@given(st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), min_size=1, max_size=30))
def test_sync_ticks_within_horizon(rows):
    traj = _traj_from_actions(rows)
    rep = detect_sync(traj)
    for t in (rep.action_sync_tick, rep.threshold_sync_tick):
        assert t is None or 0 <= t <= traj.horizon


def test_clusters_on_c5():
    g = make_regular_ring(5, 2)
    s = SystemState(0, np.ones(5), np.array([1, 1, 0, 0, 1]), np.zeros(5), np.zeros(5))
    # 4-0-1 is one run on the cycle, 4 touches 0
    assert detect_clusters(s, g) == [[0, 1, 4]]


def test_clusters_on_path_cut_ring():
    g = make_regular_ring(6, 2)
    s = SystemState(0, np.ones(6), np.array([1, 1, 0, 1, 0, 0]), np.zeros(6), np.zeros(6))
    assert detect_clusters(s, g) == [[0, 1], [3]]


def test_clusters_all_and_none():
    g = make_regular_ring(7, 4)
    assert detect_clusters(SystemState(0, np.ones(7), np.ones(7), np.zeros(7), np.zeros(7)), g) == [list(range(7))]
    assert detect_clusters(SystemState(0, np.ones(7), np.zeros(7), np.zeros(7), np.zeros(7)), g) == []


def test_stage_decomposition_example():
    rep = stage_decompose([0, 0, 0.2, 1, 1, 0.3, 0, 0, 0.1, 0])
    w = rep.waves[0]
    assert (w.t1, w.t2, w.t3, w.t4) == (2, 3, 6, 8)
    assert rep.wave_count == 2
    assert rep.full_waves == 1
    assert rep.mean_period == 6.0


def test_stage_decomposition_silent_and_partial():
    assert stage_decompose([0, 0, 0]).wave_count == 0
    rep = stage_decompose([0, 0.5, 0.7, 0.9])
    assert rep.wave_count == 1
    w = rep.waves[0]
    assert (w.t1, w.t2, w.t3, w.t4) == (1, None, None, None)


@given(st.lists(st.sampled_from([0.0, 0.3, 1.0]), max_size=60))
def test_waves_ordered(pro):
    rep = stage_decompose(pro)
    last = -1
    for w in rep.waves:
        assert w.t1 > last
        if w.t2 is not None:
            assert w.t1 <= w.t2
        if w.t3 is not None:
            assert w.t1 < w.t3
            assert w.t2 is None or w.t2 < w.t3
        if w.t4 is not None:
            assert w.t3 < w.t4
        last = w.t3 if w.t3 is not None else len(pro)


def test_phase_window():
    pt = find_phase_transition({2: False, 3: True, 5: True, 8: False})
    assert pt.boundaries == ((2, 3), (5, 8))
    assert pt.window == ((2, 3), (5, 8))


def test_phase_rates():
    pt = find_phase_transition({2: 0.1, 5: 0.9})
    assert pt.boundaries == ((2, 5),)
    assert pt.window is None


@pytest.mark.parametrize("outcomes", [{3: True, 5: True}, {2: False, 4: False}, {3: True}])
def test_no_transition(outcomes):
    with pytest.raises(NoTransition):
        find_phase_transition(outcomes)


def test_contraction_c4_vs_k5():
    assert spread_contraction(make_regular_ring(4, 2), [0, 1, 0, 1]) == (1.0, 1.0)
    before, after = spread_contraction(make_complete(5), [0, 1, 0, 0, 0])
    assert after <= 0.75 * before
    assert not neighborhoods_overlap(make_regular_ring(4, 2))
    assert neighborhoods_overlap(make_complete(5))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([make_complete(n) for n in range(3, 9)] + [make_regular_ring(n, n - 1 - (n % 2 == 0))
                                                                  for n in range(5, 12)]),
       st.integers(0, 2**31))
def test_exact_contraction(g, seed):
    rng = np.random.default_rng(seed)
    T0 = [Fraction(int(v), 997) for v in rng.integers(0, 998, g.n)]
    cert = verify_contraction(g, T0)
    if cert.premise:
        assert cert.conclusion is True
        assert Fraction(cert.details["worst_ratio"]) <= Fraction(cert.details["factor_bound"])


def test_contraction_premise_needs_regular_overlap():
    assert not verify_contraction(make_regular_ring(8, 2), [0, 1] * 4).premise
    assert verify_contraction(make_complete(4), [0, 1, 0, 1]).conclusion is True
    json.loads(verify_contraction(make_complete(4), [0, 1, 0, 1]).to_json())


def test_lemma2_premise_formula():
    assert lemma2_premise(2, 0.9, 0.2)
    assert not lemma2_premise(2, 0.1, 0.9)
    assert not lemma2_premise(2, 0.0, 0.0)


@pytest.mark.xfail(strict=True, reason="even k=2 rings are bipartite: actors alternate between the two colour "
                                       "classes and never all act at once")
def test_lemma2_even_ring_example():
    cert = verify_lemma2(8, 2, 0.9, 0.2)
    assert cert.premise
    assert cert.conclusion


def test_lemma2_even_ring_parity():
    cert = verify_lemma2(8, 2, 0.9, 0.2)
    assert cert.details["bipartite"]
    assert cert.violated
    assert cert.counterexample is not None


def test_lemma2_odd_ring():
    cert = verify_lemma2(7, 2, 0.9, 0.2)
    assert cert.premise and cert.conclusion
    assert cert.counterexample is None


def test_lemma2_vacuous():
    cert = verify_lemma2(8, 2, 0.1, 0.9)
    assert cert.premise is False
    assert cert.conclusion is None
    assert not cert.violated


def test_lemma2_n12_k4():
    rng = np.random.default_rng(0)
    for _ in range(20):
        cert = verify_lemma2(12, 4, 0.8, rng.uniform(0, 0.3, 12))
        if cert.premise:
            assert cert.conclusion


def test_theorem1_sparse_ring_vacuous():
    cert = verify_theorem1(6, 2, GameParams(0.5, 0.5, 0.2, 0.9), 0.2)
    assert cert.premise is False
    assert cert.conclusion is None


@given(st.floats(0.05, 1), st.floats(0.05, 1), st.floats(0, 1), st.floats(0, 1), st.integers(4, 10))
def test_theorem1_premises_never_jointly_hold(a, b, x, y, k):
    # a positive raw_active needs x < y, a positive raw_inactive needs x > y
    prem = theorem1_premises(12, k, GameParams(a, b, x, y))
    assert not (prem["active_inequality"] and prem["inactive_inequality"])


def test_theorem2_period16():
    cert = run_theorem2(16, seed=0)
    assert cert.premise
    assert cert.details["peak"]["wave_count"] >= 2
    assert cert.details["peak"]["mean_peak_pro"] > cert.details["trough"]["mean_peak_pro"]
    assert cert.conclusion
    assert all(cert.details["per_cycle_full"])


def test_theorem2_period6_misses_cycles():
    cert = run_theorem2(6, seed=0)
    assert not all(cert.details["per_cycle_full"])
