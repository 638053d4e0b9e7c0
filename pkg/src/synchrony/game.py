"""Two-player, two-type Bayesian participation game.

Each player is either *active* (type +1) or *non-active* (type -1) and either
acts (+1) or abstains (-1). Acting yields the private utility ``+alpha`` to an
active player and ``-alpha`` to a non-active one, plus the common utility
``beta`` when the counterpart acts too. Abstaining always pays 0.

An active player believes the counterpart is active with probability ``x``;
a non-active player believes so with probability ``y``.

`solve_equilibrium` evaluates the closed-form mixing probabilities and
clamps them to [0, 1]. `brute_force_equilibrium` finds the same root of the
four indifference conditions numerically, using only `expected_utility`.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBeliefs, NoInteriorEquilibrium

__all__ = [
    "AgentType",
    "Strategy",
    "GameParams",
    "EquilibriumProbs",
    "OracleResult",
    "payoff",
    "expected_utility",
    "solve_equilibrium",
    "brute_force_equilibrium",
]

DEGENERACY_TOL = 1e-12
RESIDUAL_TOL = 1e-6


class AgentType(enum.IntEnum):
    ACTIVE = 1
    INACTIVE = -1


class Strategy(enum.IntEnum):
    ACT = 1
    NOT_ACT = -1


@dataclass(frozen=True)
class GameParams:
    alpha: float
    beta: float
    x: float
    y: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        for name in ("x", "y"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def ratio(self) -> float:
        return self.alpha / self.beta


def _clamp(v: float) -> float:
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class EquilibriumProbs:
    """Per-type probability of acting.

    ``raw_*`` are the unclamped root of the indifference system; the
    ``p_act_*`` fields are those values clamped to [0, 1] and are the only
    ones the dynamics consume. The probability of abstaining is ``1 - p``.
    """

    p_act_active: float
    p_act_inactive: float
    raw_active: float
    raw_inactive: float

    @classmethod
    def from_raw(cls, raw_active: float, raw_inactive: float) -> "EquilibriumProbs":
        return cls(_clamp(raw_active), _clamp(raw_inactive), raw_active, raw_inactive)

    @classmethod
    def constant(cls, p_active: float, p_inactive: float | None = None) -> "EquilibriumProbs":
        """Probabilities set directly, bypassing the game (used by the verifiers)."""
        if p_inactive is None:
            p_inactive = p_active
        return cls.from_raw(float(p_active), float(p_inactive))

    def for_type(self, agent_type: int) -> float:
        return self.p_act_active if agent_type == AgentType.ACTIVE else self.p_act_inactive


def payoff(theta: int, own: int, other: int, alpha: float, beta: float) -> float:
    """Utility of one player given its type and both strategies."""
    acts = 1.0 if own == Strategy.ACT else 0.0
    other_acts = 1.0 if other == Strategy.ACT else 0.0
    return alpha * acts * (1 - abs(theta - own)) + beta * acts * other_acts


def expected_utility(own_type, own_strategy, params: GameParams, opponent_mix):
    """Bayesian expected utility of a pure strategy.

    Parameters
    ----------
    own_type : AgentType
    own_strategy : Strategy
    params : GameParams
    opponent_mix : pair
        ``(q_active, q_inactive)``: probability the counterpart acts when it
        is active / non-active. Entries may be numpy arrays, in which case the
        result is evaluated elementwise.

    Returns
    -------
    float or ndarray
    """
    q_active, q_inactive = opponent_mix
    belief = params.x if own_type == AgentType.ACTIVE else params.y
    total = 0.0
    for opp_type, p_type, q in (
        (AgentType.ACTIVE, belief, q_active),
        (AgentType.INACTIVE, 1.0 - belief, q_inactive),
    ):
        u_act = payoff(own_type, own_strategy, Strategy.ACT, params.alpha, params.beta)
        u_not = payoff(own_type, own_strategy, Strategy.NOT_ACT, params.alpha, params.beta)
        total = total + p_type * (q * u_act + (1.0 - q) * u_not)
    return total


def solve_equilibrium(params: GameParams) -> EquilibriumProbs:
    """Closed-form mixing probabilities of the participation game."""
    gap = params.x - params.y
    if abs(gap) <= DEGENERACY_TOL:
        raise DegenerateBeliefs(f"x == y ({params.x}); closed form undefined")
    r = params.ratio
    raw_active = r * (params.x + params.y - 2.0) / gap
    raw_inactive = r * (params.x + params.y) / gap
    return EquilibriumProbs.from_raw(raw_active, raw_inactive)


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the numeric equilibrium search.

    ``probs`` holds the root found for the first player's mix. ``mirror``
    is the root found independently for the second player's mix; by the
    symmetry of the game both agree. ``interior`` is true when the root
    lies inside the unit square; otherwise ``probs`` carries the clamped
    corner and ``regret`` its best-response regret per type.
    """

    probs: EquilibriumProbs
    mirror: EquilibriumProbs
    residual: float
    interior: bool
    converged: bool
    regret: tuple[float, float]


def _indifference(params: GameParams, q_active, q_inactive):
    res = []
    for t in (AgentType.ACTIVE, AgentType.INACTIVE):
        act = expected_utility(t, Strategy.ACT, params, (q_active, q_inactive))
        rest = expected_utility(t, Strategy.NOT_ACT, params, (q_active, q_inactive))
        res.append(act - rest)
    return res


def _grid_search(params, grid, max_expansions=40):
    """Coarse minimiser of the max-abs indifference residual.

    Starts on the unit square; when the best grid node sits on the boundary
    the box is widened around its centre, because the root may lie outside
    the probability simplex.
    """
    lo = np.array([0.0, 0.0])
    width = 1.0
    axis = np.linspace(0.0, 1.0, grid)
    best = None
    for _ in range(max_expansions):
        qa = lo[0] + width * axis[:, None]
        qn = lo[1] + width * axis[None, :]
        r1, r2 = _indifference(params, qa, qn)
        score = np.maximum(np.abs(r1), np.abs(r2))
        i, j = np.unravel_index(np.argmin(score), score.shape)
        best = np.array([qa[i, 0], qn[0, j]])
        on_edge = i in (0, grid - 1) or j in (0, grid - 1)
        if not on_edge or score[i, j] <= RESIDUAL_TOL:
            break
        centre = lo + width / 2.0
        width *= 4.0
        lo = centre - width / 2.0
    return best


def _refine(params, q, max_iter=30, h=1e-6):
    """Newton refinement with a finite-difference Jacobian."""
    q = np.asarray(q, dtype=float)
    res = np.array(_indifference(params, q[0], q[1]))
    for _ in range(max_iter):
        if np.max(np.abs(res)) <= 1e-13:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            step = np.zeros(2)
            step[k] = h
            up = np.array(_indifference(params, *(q + step)))
            down = np.array(_indifference(params, *(q - step)))
            jac[:, k] = (up - down) / (2 * h)
        try:
            delta = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            break
        cand = q + delta
        cand_res = np.array(_indifference(params, cand[0], cand[1]))
        if np.max(np.abs(cand_res)) >= np.max(np.abs(res)):
            break
        q, res = cand, cand_res
    return q, float(np.max(np.abs(res)))


def _regret(params, probs: EquilibriumProbs):
    mix = (probs.p_act_active, probs.p_act_inactive)
    out = []
    for t, p in ((AgentType.ACTIVE, mix[0]), (AgentType.INACTIVE, mix[1])):
        act = expected_utility(t, Strategy.ACT, params, mix)
        rest = expected_utility(t, Strategy.NOT_ACT, params, mix)
        out.append(float(max(act, rest) - (p * act + (1 - p) * rest)))
    return tuple(out)


def brute_force_equilibrium(params: GameParams, grid: int = 101) -> OracleResult:
    """Solve the four indifference conditions numerically.

    The first player's two type-agents pin down the second player's mix
    and vice versa, so the search runs twice over a ``grid x grid`` mesh
    (expanded as needed) followed by Newton refinement. A warning of class
    `NoInteriorEquilibrium` is emitted when no candidate reaches a residual
    below 1e-6; the best candidate is still returned.
    """
    if grid < 101:
        raise ValueError("grid must be >= 101")
    roots = []
    residual = 0.0
    for _player in range(2):
        q0 = _grid_search(params, grid)
        q, res = _refine(params, q0)
        roots.append(q)
        residual = max(residual, res)
    probs = EquilibriumProbs.from_raw(float(roots[0][0]), float(roots[0][1]))
    mirror = EquilibriumProbs.from_raw(float(roots[1][0]), float(roots[1][1]))
    converged = residual <= RESIDUAL_TOL
    if not converged:
        warnings.warn(
            f"no candidate brings the indifference residuals below {RESIDUAL_TOL} "
            f"(best {residual:.3g}) for {params}",
            NoInteriorEquilibrium,
            stacklevel=2,
        )
    interior = converged and all(0.0 <= v <= 1.0 for v in roots[0])
    return OracleResult(probs, mirror, residual, interior, converged, _regret(params, probs))
