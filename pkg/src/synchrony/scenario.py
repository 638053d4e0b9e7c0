"""A complete, reproducible simulation recipe.

`Scenario` bundles the network recipe, the population (game, types,
thresholds, seeds), the linkage, the driver, the activation plan and the
horizon. The CLI, the sweep runner and the calibrator all go through it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .drivers import ActivationSchedule, CycleDriver, peak_phase
from .dynamics import AffineLinkage, SimConfig, ThresholdInit, Trajectory, run
from .game import GameParams
from .netgen import Graph, NetworkSpec, load_edge_list, make_regular_ring, make_small_world

__all__ = ["derive_seed", "NetworkRecipe", "ActivationPlan", "Scenario", "run_scenario"]


def derive_seed(*keys: int) -> int:
    """Stable 32-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class NetworkRecipe:
    """``topology`` is ``small-world``, ``ring`` or ``edge-list``."""

    topology: str = "small-world"
    n: int = 50
    d: int = 4
    p_rewire: float = 0.3
    path: str | None = None

    def __post_init__(self):
        if self.topology not in ("small-world", "ring", "edge-list"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.topology == "edge-list" and not self.path:
            raise ValueError("edge-list topology needs a path")

    def build(self, seed: int) -> Graph:
        if self.topology == "ring":
            return make_regular_ring(self.n, self.d)
        if self.topology == "edge-list":
            return load_edge_list(self.path)
        return make_small_world(NetworkSpec(self.n, self.d, self.p_rewire, seed))


@dataclass(frozen=True)
class ActivationPlan:
    """How forced activations are generated.

    kind
        ``none``; ``explicit`` (``events`` as ``(tick, nodes)`` pairs); or
        ``periodic``: ``count`` random nodes forced every ``period`` ticks
        (defaults to the driver period). ``phase`` is ``peak``, ``trough``
        or an integer tick offset for the first event.
    """

    kind: str = "none"
    events: tuple = ()
    period: int | None = None
    phase: str | int = "peak"
    count: int = 1

    def __post_init__(self):
        if self.kind not in ("none", "explicit", "periodic"):
            raise ValueError(f"unknown activation kind {self.kind!r}")

    def first_tick(self, driver: CycleDriver, period: int) -> int:
        if isinstance(self.phase, (int, np.integer)):
            return int(self.phase)
        peak = peak_phase(driver)
        peak = 0.0 if peak is None else peak
        if self.phase == "peak":
            return int(round(peak)) % period
        if self.phase == "trough":
            return int(round(peak + period / 2)) % period
        raise ValueError(f"unknown phase {self.phase!r}")

    def build(self, n_agents: int, horizon: int, driver: CycleDriver, seed: int) -> ActivationSchedule:
        if self.kind == "none":
            return ActivationSchedule()
        if self.kind == "explicit":
            return ActivationSchedule(tuple((t, tuple(nodes)) for t, nodes in self.events))
        period = self.period or (int(round(driver.period_T)) if driver.period_T else None)
        if not period:
            raise ValueError("periodic activation needs a period (or a periodic driver)")
        rng = np.random.default_rng(seed)
        first = self.first_tick(driver, period)
        ticks = list(range(first, horizon + 1, period))
        picks = [sorted(rng.choice(n_agents, size=self.count, replace=False).tolist()) for _ in ticks]
        return ActivationSchedule(tuple(zip(ticks, picks)))


@dataclass(frozen=True)
class Scenario:
    game: GameParams
    network: NetworkRecipe = field(default_factory=NetworkRecipe)
    active_fraction: float = 1.0
    threshold_init: ThresholdInit = field(default_factory=ThresholdInit)
    initial_actors: int | tuple = 1
    linkage: AffineLinkage = field(default_factory=AffineLinkage)
    driver: CycleDriver = field(default_factory=CycleDriver)
    activation: ActivationPlan = field(default_factory=ActivationPlan)
    horizon: int = 50
    seed: int = 0
    closed_neighborhood: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    def sim_config(self) -> SimConfig:
        return SimConfig(
            game=self.game,
            active_fraction=self.active_fraction,
            threshold_init=self.threshold_init,
            initial_actors=self.initial_actors,
            linkage=self.linkage,
            seed=derive_seed(self.seed, 1),
            closed_neighborhood=self.closed_neighborhood,
        )

    def with_axis(self, name: str, value) -> "Scenario":
        """Copy with one sweep axis set. See ``sweep.AXES`` for names."""
        if name in ("alpha", "beta", "x", "y"):
            return replace(self, game=replace(self.game, **{name: float(value)}))
        if name in ("d", "n", "p_rewire"):
            cast = float if name == "p_rewire" else int
            return replace(self, network=replace(self.network, **{name: cast(value)}))
        if name == "active_fraction":
            return replace(self, active_fraction=float(value))
        if name == "threshold_init":
            return replace(self, threshold_init=ThresholdInit.uniform(self.threshold_init.lo, float(value)))
        if name == "period_T":
            period = float(value)
            peak = peak_phase(self.driver) or 0.0
            driver = CycleDriver.periodic(period, peak_at=peak)
            act = self.activation
            if act.kind == "periodic":
                act = replace(act, period=int(round(period)))
            return replace(self, driver=driver, activation=act)
        if name in ("horizon", "seed"):
            return replace(self, **{name: int(value)})
        raise KeyError(name)

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, frozenset):
        return sorted(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return str(obj)
    return obj


def run_scenario(scenario: Scenario, backend=None) -> tuple[Graph, Trajectory, ActivationSchedule]:
    graph = scenario.network.build(derive_seed(scenario.seed, 0))
    schedule = scenario.activation.build(graph.n, scenario.horizon, scenario.driver, derive_seed(scenario.seed, 2))
    traj = run(graph, scenario.sim_config(), scenario.driver, scenario.horizon, schedule, backend=backend)
    return graph, traj, schedule
