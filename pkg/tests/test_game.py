import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from synchrony.errors import DegenerateBeliefs, NoInteriorEquilibrium
from synchrony.game import (
    AgentType,
    GameParams,
    Strategy,
    brute_force_equilibrium,
    expected_utility,
    solve_equilibrium,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
positive = st.floats(0.01, 1.0, allow_nan=False)


def test_closed_form_interior_example():
    eq = solve_equilibrium(GameParams(0.1, 0.15, 0.2, 0.9))
    r = 0.1 / 0.15
    assert eq.raw_active == pytest.approx(r * (-0.9) / (-0.7))
    assert eq.raw_inactive == pytest.approx(r * 1.1 / (-0.7))
    assert eq.raw_active == pytest.approx(0.857142857, abs=1e-6)
    assert eq.raw_inactive == pytest.approx(-1.047619, abs=1e-6)
    assert eq.p_act_inactive == 0.0
    assert eq.p_act_active == pytest.approx(eq.raw_active)


def test_closed_form_boundary_beliefs():
    eq = solve_equilibrium(GameParams(1, 1, 1, 0))
    assert eq.raw_active == pytest.approx(-1.0)
    assert eq.raw_inactive == pytest.approx(1.0)
    assert (eq.p_act_active, eq.p_act_inactive) == (0.0, 1.0)


def test_equal_beliefs_are_degenerate():
    with pytest.raises(DegenerateBeliefs):
        solve_equilibrium(GameParams(0.5, 1, 0.5, 0.5))


@pytest.mark.parametrize("bad", [dict(alpha=0), dict(beta=-1), dict(x=1.5), dict(y=-0.1)])
def test_param_validation(bad):
    kw = dict(alpha=0.5, beta=0.5, x=0.2, y=0.8)
    kw.update(bad)
    with pytest.raises(ValueError):
        GameParams(**kw)


def test_expected_utility_examples():
    p = GameParams(0.7, 0.3, 0.8, 0.9)
    assert expected_utility(AgentType.ACTIVE, Strategy.ACT, p, (1.0, 1.0)) == pytest.approx(1.0)
    assert expected_utility(AgentType.INACTIVE, Strategy.ACT, p, (0.0, 0.0)) == pytest.approx(-0.7)
    assert expected_utility(AgentType.ACTIVE, Strategy.NOT_ACT, p, (0.3, 0.6)) == 0.0


@given(positive, positive, unit, unit, unit, unit, st.sampled_from(list(AgentType)))
def test_not_acting_is_worth_zero(a, b, x, y, qa, qi, t):
    assert expected_utility(t, Strategy.NOT_ACT, GameParams(a, b, x, y), (qa, qi)) == 0.0


@given(positive, positive, unit, unit)
def test_clamped_outputs_in_unit_interval(a, b, x, y):
    if abs(x - y) <= 1e-12:
        return
    eq = solve_equilibrium(GameParams(a, b, x, y))
    assert 0.0 <= eq.p_act_active <= 1.0
    assert 0.0 <= eq.p_act_inactive <= 1.0


@given(st.floats(0.01, 0.5), positive, unit, unit)
def test_raw_values_linear_in_ratio(a, b, x, y):
    if abs(x - y) < 1e-6:
        return
    one = solve_equilibrium(GameParams(a, b, x, y))
    two = solve_equilibrium(GameParams(2 * a, b, x, y))
    assert two.raw_active == pytest.approx(2 * one.raw_active, rel=1e-12, abs=1e-12)
    assert two.raw_inactive == pytest.approx(2 * one.raw_inactive, rel=1e-12, abs=1e-12)


@given(positive, positive, unit, unit)
def test_at_most_one_type_mixes(a, b, x, y):
    # x<y forces the non-active probability to 0, x>y the active one
    if abs(x - y) <= 1e-9:
        return
    eq = solve_equilibrium(GameParams(a, b, x, y))
    if x < y:
        assert eq.p_act_inactive == 0.0
    else:
        assert eq.p_act_active == 0.0


def test_oracle_matches_interior_example():
    params = GameParams(0.1, 0.15, 0.2, 0.9)
    res = brute_force_equilibrium(params)
    eq = solve_equilibrium(params)
    assert res.converged
    assert res.probs.p_act_active == pytest.approx(eq.p_act_active, abs=1e-4)
    assert res.probs.p_act_inactive == pytest.approx(eq.p_act_inactive, abs=1e-4)


def test_oracle_boundary_example():
    res = brute_force_equilibrium(GameParams(1, 1, 1, 0))
    assert res.residual < 1e-6
    assert res.probs.p_act_active == pytest.approx(0.0, abs=1e-6)
    assert res.probs.p_act_inactive == pytest.approx(1.0, abs=1e-6)


def test_oracle_player_symmetry():
    res = brute_force_equilibrium(GameParams(0.3, 0.5, 0.7, 0.1))
    assert res.probs.p_act_active == pytest.approx(res.mirror.p_act_active, abs=1e-9)
    assert res.probs.p_act_inactive == pytest.approx(res.mirror.p_act_inactive, abs=1e-9)


def test_oracle_rejects_coarse_grid():
    with pytest.raises(ValueError):
        brute_force_equilibrium(GameParams(0.3, 0.5, 0.7, 0.1), grid=11)


@settings(max_examples=25, deadline=None)
@given(positive, positive, unit, unit)
def test_oracle_agrees_with_closed_form(a, b, x, y):
    if abs(x - y) < 0.1:
        return
    params = GameParams(a, b, x, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoInteriorEquilibrium)
        res = brute_force_equilibrium(params)
    eq = solve_equilibrium(params)
    assert math.isclose(res.probs.p_act_active, eq.p_act_active, abs_tol=1e-3)
    assert math.isclose(res.probs.p_act_inactive, eq.p_act_inactive, abs_tol=1e-3)


def test_closed_form_is_not_a_best_response_for_active_agents():
    # active agents gain alpha from acting alone, so mixing never leaves them indifferent
    params = GameParams(0.1, 0.15, 0.2, 0.9)
    eq = solve_equilibrium(params)
    mix = (eq.p_act_active, eq.p_act_inactive)
    u = expected_utility(AgentType.ACTIVE, Strategy.ACT, params, mix)
    assert u > 0
    assert np.isfinite(u)
