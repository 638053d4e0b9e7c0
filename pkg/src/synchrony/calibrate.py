"""Rejection ABC fit of the 8-parameter model to monthly event counts.

Pipeline: draw ``theta = (alpha, beta, x, y, a_p, b_p, a_T, b_T)`` from
independent uniform priors, simulate monthly counts, keep the closest
``tolerance_quantile`` fraction of draws (Euclidean distance on the raw
count vectors), smooth the accepted cloud with a product Gaussian KDE and
summarise that density with random-walk Metropolis.

An *event* is a maximal run of ticks with ``Pro(t) > event_pro_threshold``;
it is counted in the month containing its first tick.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .drivers import ActivationSchedule, CycleDriver, driver_matrix
from .dynamics import AffineLinkage, SimConfig, ThresholdInit, _p_agent, init_state
from .errors import (ChainStuck, DegenerateBandwidth, DegenerateBeliefs, NegativeCount, ParseError,
                     TooFewAccepted)
from .game import GameParams, solve_equilibrium
from .netgen import Graph
from .scenario import derive_seed
from .sweep import worker_count

__all__ = [
    "PARAM_NAMES",
    "DEFAULT_PRIORS",
    "MIN_ACCEPTED",
    "ObservedSeries",
    "CalibrationConfig",
    "Layout",
    "PosteriorSample",
    "AbcResult",
    "ProductKDE",
    "McmcSummary",
    "load_series",
    "count_events",
    "simulate_counts",
    "distance",
    "abc_fit",
    "kde_density",
    "mcmc_summarize",
]

PARAM_NAMES = ("alpha", "beta", "x", "y", "a_p", "b_p", "a_T", "b_T")
DEFAULT_PRIORS = {
    "alpha": (0.05, 1.0),
    "beta": (0.05, 1.0),
    "x": (0.0, 1.0),
    "y": (0.0, 1.0),
    "a_p": (0.0, 1.0),
    "b_p": (0.0, 1.0),
    "a_T": (0.0, 1.0),
    "b_T": (0.0, 1.0),
}
MIN_ACCEPTED = 50
MIN_MONTHS = 6


@dataclass(frozen=True)
class ObservedSeries:
    months: tuple
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or len(counts) != len(self.months):
            raise ParseError("months and counts must be equal-length sequences")
        if np.any(counts < 0):
            raise NegativeCount("event counts must be >= 0")
        object.__setattr__(self, "counts", counts.astype(np.int64))
        object.__setattr__(self, "months", tuple(str(m) for m in self.months))

    def __len__(self):
        return len(self.counts)

    def validate(self) -> None:
        """Fitting needs at least six months."""
        if len(self) < MIN_MONTHS:
            raise ParseError(f"need at least {MIN_MONTHS} months of counts, got {len(self)}")


def load_series(path) -> ObservedSeries:
    """Read ``month,count`` rows; a header line is optional."""
    months, counts = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 'month,count', got {len(row)} fields")
            month, raw = row[0].strip(), row[1].strip()
            try:
                value = int(raw)
            except ValueError:
                if not months and lineno == 1:
                    continue
                raise ParseError(f"{path}:{lineno}: count {raw!r} is not an integer") from None
            if value < 0:
                raise NegativeCount(f"{path}:{lineno}: negative count {value}")
            months.append(month)
            counts.append(value)
    if not counts:
        raise ParseError(f"{path}: no data rows")
    return ObservedSeries(tuple(months), np.array(counts))


@dataclass(frozen=True)
class CalibrationConfig:
    """ABC, KDE and MCMC settings.

    ``kde_bandwidth`` is ``"scott"``, ``"silverman"`` or a positive float
    (a fixed bandwidth, in parameter units, for every coordinate).
    ``proposal_scale`` is relative to each coordinate's KDE bandwidth.
    """

    priors: dict = field(default_factory=lambda: dict(DEFAULT_PRIORS))
    n_draws: int = 5000
    tolerance_quantile: float = 0.02
    month_len: int = 30
    event_pro_threshold: float = 0.1
    kde_bandwidth: str | float = "scott"
    mcmc_steps: int = 20000
    mcmc_burn: int = 4000
    proposal_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        priors = {k: (float(v[0]), float(v[1])) for k, v in dict(self.priors).items()}
        missing = [p for p in PARAM_NAMES if p not in priors]
        extra = [p for p in priors if p not in PARAM_NAMES]
        if missing or extra:
            raise ValueError(f"priors must cover exactly {PARAM_NAMES}; missing {missing}, unknown {extra}")
        for name, (lo, hi) in priors.items():
            if not lo < hi:
                raise ValueError(f"prior for {name} needs lo < hi, got ({lo}, {hi})")
            if name in ("alpha", "beta"):
                if lo <= 0:
                    raise ValueError(f"prior for {name} must be > 0")
            elif lo < 0 or hi > 1:
                raise ValueError(f"prior for {name} must lie in [0, 1]")
        object.__setattr__(self, "priors", priors)
        if not 0 < self.tolerance_quantile <= 1:
            raise ValueError("tolerance_quantile must lie in (0, 1]")
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        if self.month_len < 1:
            raise ValueError("month_len must be >= 1")
        if not 0 <= self.event_pro_threshold < 1:
            raise ValueError("event_pro_threshold must lie in [0, 1)")
        if isinstance(self.kde_bandwidth, str):
            if self.kde_bandwidth not in ("scott", "silverman"):
                raise ValueError(f"unknown bandwidth rule {self.kde_bandwidth!r}")
        elif not float(self.kde_bandwidth) > 0:
            raise ValueError("fixed bandwidth must be > 0")
        if self.mcmc_steps < 1 or not 0 <= self.mcmc_burn < self.mcmc_steps:
            raise ValueError("need mcmc_steps >= 1 and 0 <= mcmc_burn < mcmc_steps")
        if self.proposal_scale < 0:
            raise ValueError("proposal_scale must be >= 0")

    @property
    def bounds(self) -> np.ndarray:
        """Prior box as an (8, 2) array in `PARAM_NAMES` order."""
        return np.array([self.priors[p] for p in PARAM_NAMES])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["priors"] = {k: list(v) for k, v in self.priors.items()}
        return d


@dataclass(frozen=True)
class Layout:
    """Everything the forward model holds fixed: graph, population law, driver and activations."""

    graph: Graph
    driver: CycleDriver = field(default_factory=lambda: CycleDriver.periodic(10))
    schedule: ActivationSchedule = field(default_factory=ActivationSchedule)
    active_fraction: float = 0.6
    threshold_init: ThresholdInit = field(default_factory=ThresholdInit)
    initial_actors: int = 0


@dataclass(frozen=True)
class PosteriorSample:
    theta: tuple
    distance: float
    accepted: bool


def count_events(pro, month_len: int, n_months: int, threshold: float) -> np.ndarray:
    """Monthly counts of maximal runs with ``pro > threshold``, binned by start tick."""
    above = np.asarray(pro) > threshold
    starts = np.flatnonzero(above & ~np.concatenate(([False], above[:-1])))
    months = starts // month_len
    return np.bincount(months[months < n_months], minlength=n_months).astype(np.int64)


class _Forward:
    """Per-layout cache of the driver and forced matrices."""

    def __init__(self, layout: Layout, config: CalibrationConfig, n_months: int):
        self.layout = layout
        self.config = config
        self.n_months = n_months
        self.horizon = n_months * config.month_len
        n = layout.graph.n
        self.f = np.ascontiguousarray(driver_matrix(layout.driver, n, self.horizon))
        self.forced = np.ascontiguousarray(layout.schedule.matrix(n, self.horizon))

    def counts(self, theta, seed: int) -> np.ndarray | None:
        """None when the beliefs are degenerate."""
        alpha, beta, x, y, a_p, b_p, a_T, b_T = (float(v) for v in theta)
        lay = self.layout
        try:
            probs = solve_equilibrium(GameParams(alpha, beta, x, y))
        except DegenerateBeliefs:
            return None
        cfg = SimConfig(game=None, probs=probs, active_fraction=lay.active_fraction,
                        threshold_init=lay.threshold_init, initial_actors=lay.initial_actors, seed=seed)
        state = init_state(lay.graph, cfg)
        a0 = state.actions | self.forced[0]
        pro = _backend.kernels.pro_series(lay.graph.indptr, lay.graph.indices, _p_agent(state.types, probs),
                                          state.thresholds, a0, self.f, self.forced, (a_p, b_p, a_T, b_T), False)
        return count_events(pro, self.config.month_len, self.n_months, self.config.event_pro_threshold)


def simulate_counts(theta, config: CalibrationConfig, layout: Layout, n_months: int, seed: int | None = None):
    """Synthetic monthly counts for one parameter vector.

    Raises `DegenerateBeliefs` when ``x == y``.
    """
    out = _Forward(layout, config, n_months).counts(theta, config.seed if seed is None else seed)
    if out is None:
        raise DegenerateBeliefs("x and y coincide")
    return out


def distance(a, b) -> float:
    """Euclidean distance between equal-length count vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"count vectors differ in shape: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


# --------------------------------------------------------------------------- KDE


class ProductKDE:
    """Product Gaussian kernel density, optionally reflected at box edges.

    With ``bounds`` set every coordinate's kernel is mirrored at both edges
    and the density is zero outside the box, so the mass inside the box is
    one up to second reflections.
    """

    def __init__(self, samples, bandwidth, bounds=None):
        self.samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if self.samples.shape[0] == 1 and np.ndim(samples) == 1:
            self.samples = self.samples.T
        self.h = np.asarray(bandwidth, dtype=float)
        self.bounds = None if bounds is None else np.asarray(bounds, dtype=float).reshape(-1, 2)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def _factor(self, j: int, u: np.ndarray) -> np.ndarray:
        """Kernel values for coordinate j, shape (len(u), n)."""
        s = self.samples[:, j]
        h = self.h[j]
        z = (u[:, None] - s[None, :]) / h
        k = np.exp(-0.5 * z * z)
        if self.bounds is not None:
            lo, hi = self.bounds[j]
            for mirror in (2 * lo - s, 2 * hi - s):
                z = (u[:, None] - mirror[None, :]) / h
                k = k + np.exp(-0.5 * z * z)
            k[(u < lo) | (u > hi)] = 0.0
        return k / (h * math.sqrt(2 * math.pi))

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim and pts.shape[0] == self.dim and self.dim > 1:
            pts = pts.T
        if self.dim == 1 and pts.shape[1] != 1:
            pts = pts.reshape(-1, 1)
        prod = np.ones((pts.shape[0], self.n))
        for j in range(self.dim):
            prod *= self._factor(j, pts[:, j])
        return prod.mean(axis=1)

    def marginal(self, j: int, grid) -> np.ndarray:
        """Density of coordinate j on ``grid``."""
        return self._factor(j, np.asarray(grid, dtype=float)).mean(axis=1)

    def mean(self) -> np.ndarray:
        return self.samples.mean(axis=0)


def _bandwidths(samples: np.ndarray, rule) -> np.ndarray:
    n, d = samples.shape
    sd = samples.std(axis=0, ddof=1)
    if isinstance(rule, str):
        if np.any(sd <= 0):
            bad = [int(j) for j in np.flatnonzero(sd <= 0)]
            raise DegenerateBandwidth(f"zero variance in coordinate(s) {bad}")
        if rule == "scott":
            factor = n ** (-1.0 / (d + 4))
        elif rule == "silverman":
            factor = (4.0 / ((d + 2) * n)) ** (1.0 / (d + 4))
        else:
            raise ValueError(f"unknown bandwidth rule {rule!r}")
        return sd * factor
    h = float(rule)
    if not h > 0:
        raise DegenerateBandwidth("fixed bandwidth must be > 0")
    return np.full(d, h)


def kde_density(samples, bandwidth="scott", bounds=None) -> ProductKDE:
    """Fit a product Gaussian KDE to an (n, d) or (n,) sample array.

    Needs at least 50 samples. ``bounds`` (d pairs) switches on reflection.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] < MIN_ACCEPTED:
        raise ValueError(f"KDE needs at least {MIN_ACCEPTED} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    return ProductKDE(arr, _bandwidths(arr, bandwidth), bounds)


# --------------------------------------------------------------------------- MCMC


@dataclass
class McmcSummary:
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    acceptance_rate: float
    scale: float
    chain: np.ndarray = field(repr=False)


def mcmc_summarize(density: ProductKDE, config: CalibrationConfig | None = None, seed: int | None = None,
                   start=None) -> McmcSummary:
    """Random-walk Metropolis on ``density``; mean and central 90% interval per coordinate.

    Proposals are Gaussian with per-coordinate sd ``scale * h_j``. During
    burn-in the scale is multiplied by 0.7 or 1.3 every 100 steps to keep
    the acceptance rate inside [0.1, 0.6]; it is frozen afterwards. A move
    counts as accepted only if the state changes.
    """
    config = config or CalibrationConfig()
    rng = np.random.default_rng(derive_seed(config.seed, 7) if seed is None else seed)
    steps, burn = config.mcmc_steps, config.mcmc_burn
    scale = float(config.proposal_scale)
    step_sd = density.h
    if start is None:
        dens = density(density.samples)
        cur = density.samples[int(np.argmax(dens))].copy()
    else:
        cur = np.asarray(start, dtype=float).copy()
    cur_d = float(density(cur[None, :])[0])
    if not cur_d > 0:
        raise ChainStuck("start point has zero density")
    chain = np.empty((steps - burn, density.dim))
    window_acc = 0
    kept_acc = 0
    for it in range(steps):
        prop = cur + scale * step_sd * rng.standard_normal(density.dim)
        prop_d = float(density(prop[None, :])[0])
        moved = False
        if prop_d > 0 and rng.random() * cur_d < prop_d and np.any(prop != cur):
            cur, cur_d = prop, prop_d
            moved = True
        if it < burn:
            window_acc += moved
            if (it + 1) % 100 == 0:
                rate = window_acc / 100
                if rate < 0.1:
                    scale *= 0.7
                elif rate > 0.6:
                    scale *= 1.3
                window_acc = 0
        else:
            kept_acc += moved
            chain[it - burn] = cur
    rate = kept_acc / (steps - burn)
    if rate < 0.01:
        raise ChainStuck(f"acceptance rate {rate:.4f} after adaptation (scale {scale:g})")
    return McmcSummary(chain.mean(axis=0), np.quantile(chain, 0.05, axis=0), np.quantile(chain, 0.95, axis=0),
                       rate, scale, chain)


# --------------------------------------------------------------------------- ABC


@dataclass
class AbcResult:
    thetas: np.ndarray
    distances: np.ndarray
    accepted: np.ndarray
    cutoff: float
    means: np.ndarray
    kde: ProductKDE
    config: CalibrationConfig

    @property
    def accepted_thetas(self) -> np.ndarray:
        return self.thetas[self.accepted]

    @property
    def samples(self) -> list:
        return [PosteriorSample(tuple(float(v) for v in th), float(d), bool(a))
                for th, d, a in zip(self.thetas, self.distances, self.accepted)]

    def point_estimate(self) -> dict:
        return dict(zip(PARAM_NAMES, (float(v) for v in self.means)))

    def write_accepted_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*PARAM_NAMES, "distance"])
            for th, d in zip(self.thetas[self.accepted], self.distances[self.accepted]):
                w.writerow([*(repr(float(v)) for v in th), repr(float(d))])


def accept_mask(distances, quantile: float) -> tuple[np.ndarray, float]:
    """Mask of the best ``ceil(quantile * N)`` finite distances, ties at the cutoff included."""
    d = np.asarray(distances, dtype=float)
    finite = np.sort(d[np.isfinite(d)])
    if finite.size == 0:
        return np.zeros(d.shape, dtype=bool), math.inf
    k = min(finite.size, max(1, math.ceil(quantile * d.size)))
    cutoff = float(finite[k - 1])
    return np.isfinite(d) & (d <= cutoff), cutoff


def _draw_job(args):
    layout, config, n_months, observed, thetas, seeds = args
    fwd = _Forward(layout, config, n_months)
    out = np.empty(len(thetas))
    for i, (th, s) in enumerate(zip(thetas, seeds)):
        sim = fwd.counts(th, int(s))
        out[i] = math.inf if sim is None else distance(sim, observed)
    return out


def abc_fit(observed: ObservedSeries, config: CalibrationConfig, layout: Layout,
            workers: int | None = None) -> AbcResult:
    """Rejection ABC with quantile acceptance, then a reflected product KDE on the accepted draws.

    ``means`` is the per-coordinate mean of the accepted draws.
    """
    observed.validate()
    rng = np.random.default_rng(config.seed)
    bounds = config.bounds
    thetas = bounds[:, 0] + (bounds[:, 1] - bounds[:, 0]) * rng.random((config.n_draws, len(PARAM_NAMES)))
    seeds = np.array([derive_seed(config.seed, 1, i) for i in range(config.n_draws)])
    n_months = len(observed)
    n_workers = worker_count(workers)
    if n_workers == 1:
        dists = _draw_job((layout, config, n_months, observed.counts, thetas, seeds))
    else:
        chunks = np.array_split(np.arange(config.n_draws), n_workers * 4)
        jobs = [(layout, config, n_months, observed.counts, thetas[c], seeds[c]) for c in chunks if len(c)]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            dists = np.concatenate(list(pool.map(_draw_job, jobs)))
    mask, cutoff = accept_mask(dists, config.tolerance_quantile)
    n_acc = int(mask.sum())
    if n_acc < MIN_ACCEPTED:
        raise TooFewAccepted(f"{n_acc} draws accepted, need at least {MIN_ACCEPTED}; "
                             "raise n_draws or tolerance_quantile")
    acc = thetas[mask]
    kde = kde_density(acc, config.kde_bandwidth, bounds)
    return AbcResult(thetas, dists, mask, cutoff, acc.mean(axis=0), kde, config)


def write_summary_json(path, result: AbcResult, mcmc: McmcSummary | None = None, extra=None) -> None:
    doc = {
        "parameters": list(PARAM_NAMES),
        "abc_mean": result.point_estimate(),
        "n_draws": int(len(result.thetas)),
        "n_accepted": int(result.accepted.sum()),
        "cutoff": result.cutoff,
        "bandwidths": dict(zip(PARAM_NAMES, (float(v) for v in result.kde.h))),
        "config": result.config.to_dict(),
    }
    if mcmc is not None:
        doc["mcmc"] = {
            "mean": dict(zip(PARAM_NAMES, (float(v) for v in mcmc.mean))),
            "interval_90": {p: [float(lo), float(hi)] for p, lo, hi in zip(PARAM_NAMES, mcmc.lower, mcmc.upper)},
            "acceptance_rate": mcmc.acceptance_rate,
            "proposal_scale": mcmc.scale,
        }
    doc.update(extra or {})
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_overlay_csv(path, observed: ObservedSeries, simulated) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["month", "observed", "simulated"])
        for m, o, s in zip(observed.months, observed.counts, simulated):
            w.writerow([m, int(o), int(s)])
