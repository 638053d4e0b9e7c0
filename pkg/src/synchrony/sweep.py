"""Parameter grids over `Scenario` axes.

Every cell of the Cartesian product of the axes is run ``replicates``
times. Seeds come from ``derive_seed(base_seed, cell_index, replicate)``,
so a row does not depend on execution order or worker count.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import detect_sync, stage_decompose
from .errors import SweepSpecError, SynchronyError, UnknownAxis
from .scenario import Scenario, derive_seed, run_scenario

__all__ = ["AXES", "SweepSpec", "SweepRow", "SweepResult", "run_sweep", "summarize", "worker_count"]

AXES = ("alpha", "beta", "x", "y", "active_fraction", "d", "period_T", "n", "p_rewire", "threshold_init")
_ALIASES = {"α": "alpha", "β": "beta", "T": "period_T", "Ty": "threshold_init", "k": "active_fraction"}


def _canon(name: str) -> str:
    return _ALIASES.get(name, name)


@dataclass(frozen=True)
class SweepSpec:
    """Axes are ``(name, values)`` pairs in declaration order."""

    axes: tuple
    base: Scenario
    replicates: int = 1
    horizon: int | None = None
    base_seed: int = 0

    def __post_init__(self):
        axes = tuple((_canon(str(name)), tuple(values)) for name, values in
                     (self.axes.items() if isinstance(self.axes, dict) else self.axes))
        if not axes:
            raise SweepSpecError("a sweep needs at least one axis")
        for name, values in axes:
            if name not in AXES:
                raise SweepSpecError(f"unknown sweep axis {name!r}; choose from {', '.join(AXES)}")
            if not values:
                raise SweepSpecError(f"axis {name!r} has no values")
        if len({name for name, _ in axes}) != len(axes):
            raise SweepSpecError("duplicate sweep axis")
        if self.replicates < 1:
            raise SweepSpecError("replicates must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise SweepSpecError("horizon must be >= 1")
        object.__setattr__(self, "axes", axes)

    @property
    def axis_names(self) -> tuple:
        return tuple(name for name, _ in self.axes)

    def cells(self):
        """Cell parameter dicts in row-major order of the axes."""
        names = self.axis_names
        for combo in itertools.product(*(values for _, values in self.axes)):
            yield dict(zip(names, combo))

    def scenario(self, cell: dict, seed: int) -> Scenario:
        sc = self.base
        if self.horizon is not None:
            sc = replace(sc, horizon=self.horizon)
        for name, value in cell.items():
            sc = sc.with_axis(name, value)
        return replace(sc, seed=seed)

    def to_dict(self) -> dict:
        return {
            "axes": {name: list(values) for name, values in self.axes},
            "replicates": self.replicates,
            "horizon": self.horizon,
            "base_seed": self.base_seed,
            "base": self.base.to_dict(),
        }


@dataclass
class SweepRow:
    cell_index: int
    params: dict
    replicate: int
    seed: int
    sync: bool = False
    sync_tick: int | None = None
    final_pro: float = math.nan
    wave_count: int = 0
    mean_period: float | None = None
    error: str | None = None
    pro: np.ndarray | None = field(default=None, repr=False)


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list

    def column(self, name):
        return [getattr(r, name) if hasattr(r, name) else r.params[name] for r in self.rows]

    def write_csv(self, path) -> None:
        names = self.spec.axis_names
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell", *names, "replicate", "seed", "sync", "sync_tick", "final_pro",
                        "wave_count", "mean_period", "error"])
            for r in self.rows:
                w.writerow([r.cell_index, *(r.params[a] for a in names), r.replicate, r.seed, int(r.sync),
                            "" if r.sync_tick is None else r.sync_tick, _fmt(r.final_pro), r.wave_count,
                            "" if r.mean_period is None else _fmt(r.mean_period), r.error or ""])

    def write_pro_csv(self, path) -> None:
        """Long table of Pro(t) per row: cell, replicate, t, Pro."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell", "replicate", "t", "Pro"])
            for r in self.rows:
                if r.pro is None:
                    continue
                for t, v in enumerate(r.pro):
                    w.writerow([r.cell_index, r.replicate, t, _fmt(v)])

    def write_manifest(self, path, extra=None) -> None:
        from . import __version__

        doc = {"spec": self.spec.to_dict(), "version": __version__, "rows": len(self.rows)}
        doc.update(extra or {})
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _fmt(v) -> str:
    return repr(float(v))


def worker_count(requested: int | None = None) -> int:
    """Worker cap: ``requested``, else ``SYNCHRONY_THREADS``, else 1."""
    if requested is None:
        env = os.environ.get("SYNCHRONY_THREADS")
        requested = int(env) if env else 1
    return max(1, int(requested))


def _run_job(job):
    spec, index, params, rep, seed = job
    row = SweepRow(index, params, rep, seed)
    try:
        _, traj, _ = run_scenario(spec.scenario(params, seed))
    except (SynchronyError, ValueError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    tick = detect_sync(traj).action_sync_tick
    cyc = stage_decompose(traj)
    row.sync = tick is not None
    row.sync_tick = tick
    row.final_pro = float(traj.pro[-1])
    row.wave_count = cyc.wave_count
    row.mean_period = cyc.mean_period
    row.pro = traj.pro
    return row


def run_sweep(spec: SweepSpec, workers: int | None = None) -> SweepResult:
    """Run every (cell, replicate); rows come back ordered by cell then replicate.

    Failures inside a cell (for example degenerate beliefs) are stored in the
    row's ``error`` field and the sweep carries on.
    """
    jobs = [(spec, i, cell, rep, derive_seed(spec.base_seed, i, rep))
            for i, cell in enumerate(spec.cells()) for rep in range(spec.replicates)]
    n_workers = worker_count(workers)
    if n_workers == 1 or len(jobs) == 1:
        rows = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_run_job, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    return SweepResult(spec, rows)


def summarize(result: SweepResult, group_by: str) -> list[dict]:
    """Aggregate rows by one axis.

    ``mean_sync_tick`` and ``std_sync_tick`` use synced rows only (NaN when
    none synced); ``censored_sync_tick`` counts an unsynced row as
    ``horizon + 1``. Errored rows count as unsynced and are excluded from
    ``mean_final_pro``.
    """
    key = _canon(group_by)
    if key not in result.spec.axis_names:
        raise UnknownAxis(group_by)
    cap = (result.spec.horizon or result.spec.base.horizon) + 1
    groups = {}
    for r in result.rows:
        groups.setdefault(r.params[key], []).append(r)
    out = []
    for value, rows in groups.items():
        ticks = np.array([r.sync_tick for r in rows if r.sync], dtype=float)
        censored = np.array([r.sync_tick if r.sync else cap for r in rows], dtype=float)
        finals = np.array([r.final_pro for r in rows if r.error is None], dtype=float)
        out.append({
            key: value,
            "runs": len(rows),
            "errors": sum(r.error is not None for r in rows),
            "sync_rate": sum(r.sync for r in rows) / len(rows),
            "mean_sync_tick": float(ticks.mean()) if ticks.size else math.nan,
            "std_sync_tick": float(ticks.std()) if ticks.size else math.nan,
            "censored_sync_tick": float(censored.mean()) if censored.size else math.nan,
            "mean_final_pro": float(finals.mean()) if finals.size else math.nan,
        })
    return out
