"""Threshold / perception / action dynamics on a fixed social graph.

One synchronous tick maps the state at ``t`` to ``t+1``:

1. thresholds: ``T_i(t+1)`` is the mean of ``T_j(t)`` over the neighbours of i
   (open neighbourhood unless ``closed_neighborhood`` is set);
2. perceptions: ``P_i(t+1)`` is the fraction of i's neighbours acting at t;
3. actions: ``a_i(t+1) = 1`` iff

       f(t) * p_i * (a_p + b_p * P_i(t+1)) > (1 - f(t)) * (1 - p_i) * (a_T + b_T * T_i(t+1))

   with ``p_i`` the act-probability of i's type; agents in the forced set for
   tick t+1 act regardless.

Actions carry no memory beyond what the rule reads, so actors drop out as
soon as the inequality fails.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .drivers import ActivationSchedule, CycleDriver, driver_matrix
from .errors import BadInitialActors, DisconnectedGraph, StateShapeError
from .game import AgentType, EquilibriumProbs, GameParams, solve_equilibrium
from .netgen import Graph

__all__ = [
    "AffineLinkage",
    "ThresholdInit",
    "SimConfig",
    "SystemState",
    "Trajectory",
    "init_state",
    "step",
    "run",
    "simulate",
    "total_deviation",
]


@dataclass(frozen=True)
class AffineLinkage:
    """Affine maps from perception to thrust and threshold to resistance."""

    a_p: float = 0.0
    b_p: float = 1.0
    a_T: float = 0.0
    b_T: float = 1.0

    def as_tuple(self):
        return (float(self.a_p), float(self.b_p), float(self.a_T), float(self.b_T))


@dataclass(frozen=True)
class ThresholdInit:
    """Initial threshold law: ``uniform`` on [lo, hi], ``constant`` c, or ``explicit`` values."""

    kind: str = "uniform"
    lo: float = 0.0
    hi: float = 0.5
    values: tuple | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if not 0.0 <= self.lo <= self.hi <= 1.0:
                raise ValueError(f"need 0 <= lo <= hi <= 1, got ({self.lo}, {self.hi})")
        elif self.kind == "constant":
            if not 0.0 <= self.lo <= 1.0:
                raise ValueError(f"constant threshold must lie in [0, 1], got {self.lo}")
        elif self.kind == "explicit":
            if self.values is None:
                raise ValueError("explicit threshold law needs values")
            vals = tuple(float(v) for v in self.values)
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError("explicit thresholds must lie in [0, 1]")
            object.__setattr__(self, "values", vals)
        else:
            raise ValueError(f"unknown threshold law {self.kind!r}")

    @classmethod
    def uniform(cls, lo=0.0, hi=0.5):
        return cls("uniform", lo, hi)

    @classmethod
    def constant(cls, c):
        return cls("constant", c, c)

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(values))

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=n)
        if self.kind == "constant":
            return np.full(n, float(self.lo))
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (n,):
            raise StateShapeError(f"explicit thresholds have length {len(vals)}, graph has {n} nodes")
        return vals.copy()


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to initialise and drive one simulation.

    ``initial_actors`` is either a count drawn at random or an explicit node
    collection. ``types`` optionally fixes the type vector (+1 active, -1
    non-active); otherwise types are drawn with ``P(active) = active_fraction``.
    ``probs`` bypasses the game solve when set.
    """

    game: GameParams | None = None
    active_fraction: float = 1.0
    threshold_init: ThresholdInit = field(default_factory=ThresholdInit)
    initial_actors: int | Sequence[int] = 1
    linkage: AffineLinkage = field(default_factory=AffineLinkage)
    seed: int = 0
    types: Sequence[int] | None = None
    probs: EquilibriumProbs | None = None
    closed_neighborhood: bool = False

    def __post_init__(self):
        if not 0.0 <= self.active_fraction <= 1.0:
            raise ValueError(f"active_fraction must lie in [0, 1], got {self.active_fraction}")
        if self.game is None and self.probs is None:
            raise ValueError("SimConfig needs game parameters or explicit probabilities")

    def equilibrium(self) -> EquilibriumProbs:
        if self.probs is not None:
            return self.probs
        return solve_equilibrium(self.game)


@dataclass
class SystemState:
    t: int
    types: np.ndarray
    actions: np.ndarray
    thresholds: np.ndarray
    perceptions: np.ndarray

    @property
    def n(self) -> int:
        return len(self.actions)


def total_deviation(thresholds) -> float:
    T = np.asarray(thresholds, dtype=float)
    return float(np.sum((T - T.mean()) ** 2))


def init_state(graph: Graph, config: SimConfig) -> SystemState:
    """Draw types, thresholds and initial actors (in that order) from ``config.seed``."""
    if not graph.connected:
        raise DisconnectedGraph("dynamics require a connected graph")
    n = graph.n
    rng = np.random.default_rng(config.seed)
    if config.types is not None:
        types = np.asarray(config.types, dtype=np.int8)
        if types.shape != (n,) or not np.all(np.isin(types, (1, -1))):
            raise StateShapeError(f"types must be a length-{n} vector of +1/-1")
    else:
        types = np.where(rng.random(n) < config.active_fraction, AgentType.ACTIVE, AgentType.INACTIVE).astype(np.int8)
    thresholds = config.threshold_init.draw(n, rng)
    actions = np.zeros(n, dtype=np.uint8)
    actors = config.initial_actors
    if isinstance(actors, (int, np.integer)):
        if not 0 <= actors <= n:
            raise BadInitialActors(f"cannot draw {actors} initial actors from {n} nodes")
        actions[rng.choice(n, size=int(actors), replace=False)] = 1
    else:
        idx = [int(v) for v in actors]
        bad = [v for v in idx if not 0 <= v < n]
        if bad:
            raise BadInitialActors(f"initial actors {bad} out of range for n={n}")
        actions[idx] = 1
    return SystemState(0, types, actions, thresholds, np.zeros(n))


def _p_agent(types, probs: EquilibriumProbs) -> np.ndarray:
    return np.where(types == AgentType.ACTIVE, probs.p_act_active, probs.p_act_inactive).astype(float)


def step(state: SystemState, graph: Graph, probs: EquilibriumProbs, driver_value, forced=(),
         linkage: AffineLinkage = AffineLinkage(), closed_neighborhood: bool = False) -> SystemState:
    """Advance one tick.

    ``driver_value`` is f(t), a scalar or a per-agent vector. ``forced`` lists
    the nodes pinned to act in the new state.
    """
    n = graph.n
    if state.n != n:
        raise StateShapeError(f"state has {state.n} agents, graph has {n}")
    f_row = np.broadcast_to(np.asarray(driver_value, dtype=float), (n,)).copy()
    forced_row = np.zeros(n, dtype=np.uint8)
    forced = list(forced)
    if forced:
        forced_row[forced] = 1
    T1, P1, a1 = _backend.kernels.advance(
        graph.indptr, graph.indices, _p_agent(state.types, probs), state.thresholds,
        state.actions, f_row, forced_row, linkage.as_tuple(), closed_neighborhood,
    )
    return SystemState(state.t + 1, state.types, a1, T1, P1)


class Trajectory:
    """Full per-tick record of a run.

    Attributes
    ----------
    actions, thresholds, perceptions : ndarray, shape (horizon+1, n)
    types : ndarray, shape (n,)
    pro : ndarray
        Fraction of acting agents per tick.
    total_deviation : ndarray
        Sum of squared threshold deviations from the tick mean.
    """

    def __init__(self, types, actions, thresholds, perceptions, probs=None):
        self.types = np.asarray(types)
        self.actions = actions
        self.thresholds = thresholds
        self.perceptions = perceptions
        self.probs = probs
        self.pro = actions.sum(axis=1) / actions.shape[1]
        centred = thresholds - thresholds.mean(axis=1, keepdims=True)
        self.total_deviation = np.sum(centred ** 2, axis=1)

    @property
    def horizon(self) -> int:
        return self.actions.shape[0] - 1

    @property
    def n(self) -> int:
        return self.actions.shape[1]

    def state(self, t: int) -> SystemState:
        return SystemState(t, self.types, self.actions[t], self.thresholds[t], self.perceptions[t])

    @property
    def states(self):
        return [self.state(t) for t in range(self.horizon + 1)]

    def write_csv(self, path) -> None:
        """One row per (t, agent)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "agent", "type", "action", "threshold", "perception"])
            for t in range(self.horizon + 1):
                for i in range(self.n):
                    w.writerow([t, i, int(self.types[i]), int(self.actions[t, i]),
                                repr(float(self.thresholds[t, i])), repr(float(self.perceptions[t, i]))])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "Pro", "TotalDeviation"])
            for t in range(self.horizon + 1):
                w.writerow([t, repr(float(self.pro[t])), repr(float(self.total_deviation[t]))])


def simulate(graph: Graph, state0: SystemState, probs: EquilibriumProbs, f: np.ndarray,
             forced: np.ndarray, linkage: AffineLinkage = AffineLinkage(),
             closed_neighborhood: bool = False, backend=None) -> Trajectory:
    """Low-level run from an explicit initial state.

    ``f`` has shape ``(horizon, n)`` and ``forced`` shape ``(horizon+1, n)``.
    """
    kern = _backend.get(backend)
    p_agent = _p_agent(state0.types, probs)
    A, T, P = kern.simulate(graph.indptr, graph.indices, p_agent, np.asarray(state0.thresholds, float),
                            np.asarray(state0.actions, np.uint8), np.ascontiguousarray(f, float),
                            np.ascontiguousarray(forced, np.uint8), linkage.as_tuple(), closed_neighborhood)
    P[0] = state0.perceptions
    return Trajectory(state0.types, A, T, P, probs)


def run(graph: Graph, config: SimConfig, driver: CycleDriver, horizon: int,
        schedule: ActivationSchedule | None = None, backend=None) -> Trajectory:
    """Simulate ``horizon`` ticks.

    Forced activations at tick 0 join the initial actors; those at tick
    ``t >= 1`` pin the listed agents to act at t.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    probs = config.equilibrium()
    state0 = init_state(graph, config)
    schedule = schedule or ActivationSchedule()
    forced = schedule.matrix(graph.n, horizon)
    state0.actions[forced[0].astype(bool)] = 1
    f = driver_matrix(driver, graph.n, horizon)
    return simulate(graph, state0, probs, f, forced, config.linkage, config.closed_neighborhood, backend)
