"""Detectors over trajectories and empirical checks of the model's theorems."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .drivers import ActivationSchedule, CycleDriver, driver_matrix
from .dynamics import SimConfig, SystemState, ThresholdInit, Trajectory, run, simulate
from .errors import NoTransition
from .game import EquilibriumProbs, GameParams, solve_equilibrium, DegenerateBeliefs
from .netgen import Graph, make_regular_ring

__all__ = [
    "SyncReport",
    "Wave",
    "CycleReport",
    "PhaseTransition",
    "Certificate",
    "detect_sync",
    "detect_clusters",
    "stage_decompose",
    "find_phase_transition",
    "lemma2_premise",
    "verify_lemma2",
    "theorem1_premises",
    "verify_theorem1",
    "verify_theorem2",
    "full_cycle_outcome",
    "spread_contraction",
    "neighborhoods_overlap",
    "verify_contraction",
    "theorem2_scenario",
    "run_theorem2",
]


@dataclass(frozen=True)
class SyncReport:
    action_sync_tick: int | None
    threshold_sync_tick: int | None
    eps: float


def detect_sync(traj: Trajectory, eps: float | None = None) -> SyncReport:
    """First tick of full participation and first tick of threshold consensus.

    ``eps`` defaults to ``1e-6 * n``.
    """
    if eps is None:
        eps = 1e-6 * traj.n
    if eps <= 0:
        raise ValueError("eps must be > 0")
    full = np.flatnonzero(traj.pro == 1.0)
    calm = np.flatnonzero(traj.total_deviation < eps)
    return SyncReport(
        int(full[0]) if full.size else None,
        int(calm[0]) if calm.size else None,
        eps,
    )


def detect_clusters(state: SystemState, graph: Graph) -> list[list[int]]:
    """Connected components of the subgraph induced by acting agents.

    Components are sorted by size (descending), ties by smallest node.
    """
    acting = np.asarray(state.actions).astype(bool)
    seen = np.zeros(graph.n, dtype=bool)
    comps = []
    for s in np.flatnonzero(acting):
        if seen[s]:
            continue
        seen[s] = True
        comp = [int(s)]
        queue = deque([int(s)])
        while queue:
            u = queue.popleft()
            for v in graph.adjacency[u]:
                if acting[v] and not seen[v]:
                    seen[v] = True
                    comp.append(v)
                    queue.append(v)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: (-len(c), c[0]))
    return comps


@dataclass(frozen=True)
class Wave:
    """Stage boundaries of one collective-action wave.

    t1: first tick with any actor; t2: first tick with everyone acting
    (None for a partial wave); t3: first tick with nobody acting after t1
    (None if the wave outlasts the record); t4: next tick with an actor
    after t3 (None if none follows).
    """

    t1: int
    t2: int | None
    t3: int | None
    t4: int | None
    peak_pro: float

    @property
    def complete(self) -> bool:
        return self.t2 is not None


@dataclass(frozen=True)
class CycleReport:
    waves: tuple
    wave_count: int
    full_waves: int
    mean_period: float | None
    mean_peak_pro: float


def stage_decompose(traj) -> CycleReport:
    """Split a Pro(t) record into activation/diffusion/recession/silence waves.

    Accepts a `Trajectory` or a plain Pro sequence.
    """
    pro = np.asarray(traj.pro if isinstance(traj, Trajectory) else traj, dtype=float)
    n_ticks = len(pro)
    waves = []
    t = 0
    while t < n_ticks:
        if pro[t] <= 0:
            t += 1
            continue
        t1 = t
        t2 = None
        peak = 0.0
        while t < n_ticks and pro[t] > 0:
            if t2 is None and pro[t] >= 1.0:
                t2 = t
            peak = max(peak, float(pro[t]))
            t += 1
        t3 = t if t < n_ticks else None
        t4 = None
        if t3 is not None:
            nxt = np.flatnonzero(pro[t3:] > 0)
            t4 = int(t3 + nxt[0]) if nxt.size else None
        waves.append(Wave(t1, t2, t3, t4, peak))
    starts = [w.t1 for w in waves]
    period = float(np.mean(np.diff(starts))) if len(starts) > 1 else None
    mean_peak = float(np.mean([w.peak_pro for w in waves])) if waves else 0.0
    return CycleReport(tuple(waves), len(waves), sum(w.complete for w in waves), period, mean_peak)


@dataclass(frozen=True)
class PhaseTransition:
    """Degrees bracketing each flip of the sync outcome.

    ``boundaries`` holds ``(d_before, d_after)`` pairs, read as the interval
    ``(d_before, d_after]``. ``window`` is ``(lower, upper)`` when the outcome
    rises then falls (fail / sync / fail), each entry one of those pairs.
    """

    boundaries: tuple
    window: tuple | None


def find_phase_transition(sweep_results: dict, rate_threshold: float = 0.5) -> PhaseTransition:
    """Locate the critical degree(s) from a map ``d -> outcome``.

    Outcomes may be booleans or sync rates (compared against
    ``rate_threshold``).
    """
    if len(sweep_results) < 2:
        raise NoTransition("need outcomes for at least two degrees")
    ds = sorted(sweep_results)
    ok = [bool(sweep_results[d]) if isinstance(sweep_results[d], (bool, np.bool_))
          else float(sweep_results[d]) > rate_threshold for d in ds]
    bounds = tuple((ds[i], ds[i + 1]) for i in range(len(ds) - 1) if ok[i] != ok[i + 1])
    if not bounds:
        raise NoTransition("outcome is the same for every degree")
    window = None
    if len(bounds) == 2 and not ok[0] and not ok[-1]:
        window = bounds
    return PhaseTransition(bounds, window)


@dataclass
class Certificate:
    """Result of one empirical theorem check.

    ``conclusion`` is None when the premise fails (nothing is claimed).
    ``counterexample`` holds a state dump when premise holds but the
    conclusion does not.
    """

    name: str
    inputs: dict
    premises: dict
    premise: bool
    conclusion: bool | None
    details: dict = field(default_factory=dict)
    counterexample: dict | None = None

    @property
    def violated(self) -> bool:
        return self.premise and self.conclusion is False

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def _dump_state(traj: Trajectory, t: int) -> dict:
    return {
        "t": t,
        "types": traj.types.tolist(),
        "actions": traj.actions[t].tolist(),
        "thresholds": traj.thresholds[t].tolist(),
        "perceptions": traj.perceptions[t].tolist(),
        "pro_series": traj.pro.tolist(),
    }


def spread_contraction(graph: Graph, thresholds) -> tuple[float, float]:
    """``(spread before, spread after)`` of one open-neighbourhood averaging step."""
    T = np.asarray(thresholds, dtype=float)
    T1 = np.array([T[list(nb)].mean() for nb in graph.adjacency])
    return float(T.max() - T.min()), float(T1.max() - T1.min())


def neighborhoods_overlap(graph: Graph) -> bool:
    """True when every pair of nodes shares at least one neighbour."""
    sets = [set(nb) for nb in graph.adjacency]
    return all(sets[i] & sets[j] for i in range(graph.n) for j in range(i + 1, graph.n))


def _average_exact(graph: Graph, T):
    return [sum((T[j] for j in nb), Fraction(0)) / len(nb) for nb in graph.adjacency]


def verify_contraction(graph: Graph, T0, ticks: int = 5) -> Certificate:
    """Exact-arithmetic check that max-min of T shrinks by at least (1 - 1/k) each tick.

    ``T0`` entries are converted to `Fraction`. The premise is a k-regular
    graph whose neighbourhoods pairwise overlap.
    """
    degs = set(int(d) for d in graph.degrees)
    k = degs.pop() if len(degs) == 1 else None
    T = [Fraction(v) for v in T0]
    overlap = neighborhoods_overlap(graph)
    premises = {"regular_degree": k, "pairwise_overlap": overlap}
    inputs = {"n": graph.n, "kind": graph.kind, "T0": [str(v) for v in T], "ticks": ticks}
    if k is None or not overlap:
        return Certificate("contraction", inputs, premises, False, None)
    factor = 1 - Fraction(1, k)
    spreads = [max(T) - min(T)]
    worst = Fraction(0)
    ok = True
    for _ in range(ticks):
        T = _average_exact(graph, T)
        spreads.append(max(T) - min(T))
        prev, cur = spreads[-2], spreads[-1]
        if cur > factor * prev:
            ok = False
        if prev > 0:
            worst = max(worst, cur / prev)
    details = {"factor_bound": str(factor), "worst_ratio": str(worst), "spreads": [str(s) for s in spreads]}
    cert = Certificate("contraction", inputs, premises, True, ok, details)
    if not ok:
        cert.counterexample = {"thresholds": [str(v) for v in T]}
    return cert


def lemma2_premise(k: int, p: float, max_t0: float) -> bool:
    """``1/k > ((1-p)/p) * max T(0)`` with p the act probability."""
    if p <= 0:
        return False
    return 1.0 / k > (1.0 - p) / p * max_t0


def _persistent_full(pro) -> int | None:
    """First tick from which Pro stays at 1 through the end, else None."""
    pro = np.asarray(pro)
    if pro[-1] != 1.0:
        return None
    not_full = np.flatnonzero(pro != 1.0)
    return int(not_full[-1] + 1) if not_full.size else 0


def verify_lemma2(n: int, k: int, p: float, T0, horizon: int = 200, seed_actor: int = 0) -> Certificate:
    """Check the synchronisation lemma on a ``k``-regular ring of ``n`` nodes.

    Every agent shares act-probability ``p``; f is held at 1/2, there is no
    forced activation, and the single actor at t=0 is ``seed_actor``. The
    conclusion holds when everyone acts from some tick within the horizon
    onward.
    """
    graph = make_regular_ring(n, k)
    T0 = np.asarray(T0, dtype=float)
    if T0.shape == ():
        T0 = np.full(n, float(T0))
    premise = lemma2_premise(k, p, float(T0.max()))
    inputs = {"n": n, "k": k, "p": p, "T0": T0.tolist(), "horizon": horizon, "seed_actor": seed_actor}
    premises = {
        "k_regular_connected": graph.connected,
        "inverse_degree": 1.0 / k,
        "ratio_times_max_threshold": (1.0 - p) / p * float(T0.max()) if p > 0 else math.inf,
    }
    a0 = np.zeros(n, dtype=np.uint8)
    a0[seed_actor] = 1
    state0 = SystemState(0, np.ones(n, dtype=np.int8), a0, T0.copy(), np.zeros(n))
    f = np.full((horizon, n), 0.5)
    forced = np.zeros((horizon + 1, n), dtype=np.uint8)
    traj = simulate(graph, state0, EquilibriumProbs.constant(p), f, forced)
    full = np.flatnonzero(traj.pro == 1.0)
    settled = _persistent_full(traj.pro)
    details = {
        "first_full_tick": int(full[0]) if full.size else None,
        "settled_tick": settled,
        "bipartite": graph.is_bipartite(),
        "final_spread": float(np.ptp(traj.thresholds[-1])),
    }
    if not premise:
        return Certificate("lemma2", inputs, premises, False, None, details)
    conclusion = settled is not None
    cert = Certificate("lemma2", inputs, premises, True, conclusion, details)
    if not conclusion:
        cert.counterexample = _dump_state(traj, traj.horizon)
    return cert


def theorem1_premises(n: int, k: int, params: GameParams) -> dict:
    """The three inequalities of the spontaneous-action theorem, evaluated as written."""
    try:
        probs = solve_equilibrium(params)
    except DegenerateBeliefs:
        return {"dense_ring": k > n / 2, "active_inequality": False, "inactive_inequality": False,
                "raw_active": None, "raw_inactive": None}
    ra, ri = probs.raw_active, probs.raw_inactive
    return {
        "dense_ring": k > n / 2,
        "active_inequality": ra > k * (1 - ra),
        "inactive_inequality": ri > k * (1 - ri),
        "raw_active": ra,
        "raw_inactive": ri,
    }


def verify_theorem1(n: int, k: int, params: GameParams, T0, horizon: int = 200,
                    active_fraction: float = 0.5, seed: int = 0) -> Certificate:
    """Check full synchronisation (actions and threshold consensus) under the theorem's premises."""
    graph = make_regular_ring(n, k)
    T0 = np.asarray(T0, dtype=float)
    if T0.shape == ():
        T0 = np.full(n, float(T0))
    prem = theorem1_premises(n, k, params)
    premise = prem["dense_ring"] and prem["active_inequality"] and prem["inactive_inequality"]
    inputs = {"n": n, "k": k, "params": asdict(params), "T0": T0.tolist(), "horizon": horizon,
              "active_fraction": active_fraction, "seed": seed}
    if not premise:
        return Certificate("theorem1", inputs, prem, False, None)
    cfg = SimConfig(game=params, active_fraction=active_fraction, threshold_init=ThresholdInit.explicit(T0),
                    initial_actors=[0], seed=seed)
    traj = run(graph, cfg, CycleDriver.constant(0.5), horizon)
    report = detect_sync(traj)
    settled = _persistent_full(traj.pro)
    conclusion = settled is not None and report.threshold_sync_tick is not None
    cert = Certificate("theorem1", inputs, prem, True, conclusion,
                       {"settled_tick": settled, "threshold_sync_tick": report.threshold_sync_tick})
    if not conclusion:
        cert.counterexample = _dump_state(traj, traj.horizon)
    return cert


def full_cycle_outcome(traj: Trajectory, schedule: ActivationSchedule, period: int) -> list[bool]:
    """Per activation event, whether Pro reaches 1 before the next event (or within one period)."""
    out = []
    ticks = [t for t, nodes in schedule.events if nodes and t <= traj.horizon]
    for i, t in enumerate(ticks):
        end = ticks[i + 1] if i + 1 < len(ticks) else min(t + period, traj.horizon + 1)
        out.append(bool(np.any(traj.pro[t:end] == 1.0)))
    return out


def verify_theorem2(graph: Graph, driver: CycleDriver, schedule: ActivationSchedule, config: SimConfig,
                    horizon: int) -> Certificate:
    """Peak-coupled activations versus the same activations shifted half a period.

    The premise is that activations sit at the driver's peak phase and that
    the synchronisation-lemma inequality holds with k the largest degree, p
    the largest act-probability and the largest initial threshold. The
    conclusion holds when the coupled run shows at least two complete waves
    and the shifted (trough) run has strictly lower mean peak participation.
    """
    period = driver.period_T
    if period is None:
        raise ValueError("the cycle check needs a periodic driver")
    from .drivers import coordination_deviation

    dev = coordination_deviation(driver, schedule)
    half = int(round(period / 2))
    trough = schedule.shifted(half)
    peak_traj = run(graph, config, driver, horizon, schedule)
    trough_traj = run(graph, config, driver, horizon, trough)
    peak_rep = stage_decompose(peak_traj)
    trough_rep = stage_decompose(trough_traj)
    probs = config.equilibrium()
    p_max = max(probs.p_act_active, probs.p_act_inactive)
    t_max = float(peak_traj.thresholds[0].max())
    k_max = int(graph.degrees.max())
    lemma = lemma2_premise(k_max, p_max, t_max)
    premise = dev <= 0.5 and lemma
    details = {
        "period": period,
        "dev_peak": dev,
        "dev_trough": coordination_deviation(driver, trough),
        "peak": {"wave_count": peak_rep.wave_count, "full_waves": peak_rep.full_waves,
                 "mean_peak_pro": peak_rep.mean_peak_pro, "mean_period": peak_rep.mean_period},
        "trough": {"wave_count": trough_rep.wave_count, "full_waves": trough_rep.full_waves,
                   "mean_peak_pro": trough_rep.mean_peak_pro, "mean_period": trough_rep.mean_period},
        "per_cycle_full": full_cycle_outcome(peak_traj, schedule, int(round(period))),
    }
    inputs = {"period": period, "horizon": horizon, "events": len(schedule), "seed": config.seed}
    prem = {"activation_at_peak": dev <= 0.5, "lemma2_inequality": lemma, "max_degree": k_max,
            "max_act_probability": p_max, "max_initial_threshold": t_max}
    if not premise:
        return Certificate("theorem2", inputs, prem, False, None, details)
    conclusion = peak_rep.full_waves >= 2 and peak_rep.mean_peak_pro > trough_rep.mean_peak_pro
    cert = Certificate("theorem2", inputs, prem, True, conclusion, details)
    if not conclusion:
        cert.counterexample = _dump_state(peak_traj, peak_traj.horizon)
    return cert


def theorem2_scenario(period: int, seed: int, phase="peak", horizon: int = 200):
    """Reference cycle set-up: everyone active-type, act-probability 0.9.

    Small world n=50, d=6; thresholds uniform on [0, 0.5]; one random node
    forced per period at the chosen driver phase; nobody acts at t=0.
    """
    from .scenario import ActivationPlan, NetworkRecipe, Scenario

    return Scenario(
        game=GameParams(0.7, 1.0, 0.2, 0.9),
        network=NetworkRecipe("small-world", 50, 6, 0.3),
        active_fraction=1.0,
        threshold_init=ThresholdInit.uniform(0.0, 0.5),
        initial_actors=0,
        driver=CycleDriver.periodic(period, peak_at=2),
        activation=ActivationPlan("periodic", period=period, phase=phase, count=1),
        horizon=horizon,
        seed=seed,
    )


def run_theorem2(period: int, seed: int, horizon: int = 200) -> Certificate:
    """`verify_theorem2` on the reference set-up."""
    from .scenario import derive_seed

    sc = theorem2_scenario(period, seed, "peak", horizon)
    graph = sc.network.build(derive_seed(sc.seed, 0))
    schedule = sc.activation.build(graph.n, horizon, sc.driver, derive_seed(sc.seed, 2))
    cert = verify_theorem2(graph, sc.driver, schedule, sc.sim_config(), horizon)
    cert.inputs["scenario_seed"] = seed
    return cert
