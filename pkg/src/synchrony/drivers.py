"""Exogenous drivers: the willingness waveform f(t) and forced activations I(t)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySchedule, ParseError

__all__ = [
    "CycleDriver",
    "ActivationSchedule",
    "evaluate",
    "driver_matrix",
    "coordination_deviation",
    "peak_phase",
]


@dataclass(frozen=True)
class CycleDriver:
    """Willingness coefficient generator.

    kind
        ``"constant"`` emits ``c``; ``"sinusoid"`` emits
        ``0.5*sin(m*t + n) + 0.5``; ``"piecewise"`` repeats ``table`` with
        period ``len(table)``.
    per_agent
        Optional ``(n_agents, 2)`` array of ``(m_i, n_i)`` overriding the
        sinusoid parameters agent by agent.
    period_T
        Nominal period in ticks. Defaults to ``2*pi/m`` for sinusoids and to
        ``len(table)`` for tables.
    """

    kind: str = "constant"
    c: float = 0.5
    m: float = 0.0
    n: float = 0.0
    table: tuple = ()
    per_agent: tuple | None = None
    period_T: float | None = None

    def __post_init__(self):
        if self.kind == "constant":
            if not 0.0 <= self.c <= 1.0:
                raise ValueError(f"constant driver value must lie in [0, 1], got {self.c}")
        elif self.kind == "sinusoid":
            if self.per_agent is not None:
                object.__setattr__(self, "per_agent", tuple(tuple(map(float, r)) for r in self.per_agent))
        elif self.kind == "piecewise":
            table = tuple(float(v) for v in self.table)
            if not table or any(not 0.0 <= v <= 1.0 for v in table):
                raise ValueError("piecewise table must be non-empty with values in [0, 1]")
            object.__setattr__(self, "table", table)
        else:
            raise ValueError(f"unknown driver kind {self.kind!r}")
        if self.period_T is None:
            if self.kind == "sinusoid" and self.m:
                object.__setattr__(self, "period_T", 2 * math.pi / abs(self.m))
            elif self.kind == "piecewise":
                object.__setattr__(self, "period_T", float(len(self.table)))

    @classmethod
    def constant(cls, c: float = 0.5) -> "CycleDriver":
        return cls(kind="constant", c=c)

    @classmethod
    def sinusoid(cls, m: float, n: float = 0.0, per_agent=None) -> "CycleDriver":
        return cls(kind="sinusoid", m=m, n=n, per_agent=per_agent)

    @classmethod
    def periodic(cls, period: float, peak_at: float = 0.0) -> "CycleDriver":
        """Sinusoid with the given period whose maximum falls on tick ``peak_at``."""
        m = 2 * math.pi / period
        return cls(kind="sinusoid", m=m, n=math.pi / 2 - m * peak_at, period_T=float(period))

    @property
    def homogeneous(self) -> bool:
        return self.per_agent is None

    def _mn(self, agent: int):
        if self.per_agent is None:
            return self.m, self.n
        return self.per_agent[agent]


def evaluate(driver: CycleDriver, agent: int, t: int) -> float:
    """Value of the willingness coefficient for ``agent`` at tick ``t``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if driver.kind == "constant":
        return driver.c
    if driver.kind == "piecewise":
        return driver.table[t % len(driver.table)]
    m, n = driver._mn(agent)
    return 0.5 * math.sin(m * t + n) + 0.5


def driver_matrix(driver: CycleDriver, n_agents: int, horizon: int) -> np.ndarray:
    """``(horizon, n_agents)`` array of ``f_i(t)`` for ``t = 0..horizon-1``."""
    t = np.arange(horizon, dtype=float)[:, None]
    if driver.kind == "constant":
        return np.full((horizon, n_agents), driver.c)
    if driver.kind == "piecewise":
        table = np.asarray(driver.table)
        col = table[np.arange(horizon) % len(table)][:, None]
        return np.repeat(col, n_agents, axis=1)
    if driver.per_agent is None:
        m = np.full(n_agents, driver.m)
        n = np.full(n_agents, driver.n)
    else:
        arr = np.asarray(driver.per_agent, dtype=float)
        if arr.shape != (n_agents, 2):
            raise ValueError(f"per_agent must have shape ({n_agents}, 2), got {arr.shape}")
        m, n = arr[:, 0], arr[:, 1]
    return 0.5 * np.sin(m[None, :] * t + n[None, :]) + 0.5


@dataclass(frozen=True)
class ActivationSchedule:
    """Forced activations: ``events`` is a sequence of ``(tick, nodes)``."""

    events: tuple = field(default_factory=tuple)

    def __post_init__(self):
        merged: dict[int, set] = {}
        for tick, nodes in self.events:
            tick = int(tick)
            if tick < 0:
                raise ValueError(f"activation tick must be >= 0, got {tick}")
            merged.setdefault(tick, set()).update(int(v) for v in nodes)
        events = tuple((t, frozenset(merged[t])) for t in sorted(merged))
        object.__setattr__(self, "events", events)

    def __len__(self):
        return len(self.events)

    def at(self, tick: int) -> frozenset:
        for t, nodes in self.events:
            if t == tick:
                return nodes
        return frozenset()

    def validate(self, n_agents: int) -> None:
        for t, nodes in self.events:
            bad = [v for v in nodes if not 0 <= v < n_agents]
            if bad:
                raise ValueError(f"activation at tick {t} names invalid nodes {sorted(bad)}")

    def matrix(self, n_agents: int, horizon: int) -> np.ndarray:
        """``(horizon+1, n_agents)`` uint8 indicator of I_i(t)."""
        self.validate(n_agents)
        out = np.zeros((horizon + 1, n_agents), dtype=np.uint8)
        for t, nodes in self.events:
            if t <= horizon and nodes:
                out[t, sorted(nodes)] = 1
        return out

    def shifted(self, offset: int) -> "ActivationSchedule":
        return ActivationSchedule(tuple((t + offset, nodes) for t, nodes in self.events if t + offset >= 0))

    @classmethod
    def periodic(cls, period: int, first: int, horizon: int, nodes) -> "ActivationSchedule":
        """Same node set activated at ``first, first+period, ...`` up to ``horizon``.

        ``nodes`` may also be a callable ``k -> nodes`` giving the set for the
        ``k``-th event.
        """
        if period < 1:
            raise ValueError("period must be >= 1")
        events = []
        for k, t in enumerate(range(first, horizon + 1, period)):
            events.append((t, nodes(k) if callable(nodes) else nodes))
        return cls(tuple(events))

    @classmethod
    def from_csv(cls, path) -> "ActivationSchedule":
        """Rows ``tick,node``; an optional header line is skipped."""
        rows = []
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or not "".join(row).strip():
                    continue
                if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                    continue
                if len(row) != 2:
                    raise ParseError(f"{path}:{lineno}: expected 'tick,node'")
                try:
                    rows.append((int(row[0]), [int(row[1])]))
                except ValueError:
                    raise ParseError(f"{path}:{lineno}: non-integer field") from None
        return cls(tuple(rows))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["tick", "node"])
            for t, nodes in self.events:
                for v in sorted(nodes):
                    w.writerow([t, v])


def peak_phase(driver: CycleDriver, agent: int = 0) -> float | None:
    """Tick in ``[0, period)`` where the driver peaks; None for constants."""
    if driver.kind == "constant":
        return None
    if driver.kind == "piecewise":
        table = driver.table
        return float(table.index(max(table)))
    m, n = driver._mn(agent)
    period = 2 * math.pi / abs(m)
    t0 = (math.pi / 2 - n) / m
    return t0 % period


def _cyclic_distance(t: float, peaks, period: float) -> float:
    best = math.inf
    for p in peaks:
        d = (t - p) % period
        best = min(best, d, period - d)
    return best


def coordination_deviation(driver: CycleDriver, schedule: ActivationSchedule) -> float:
    """Mean distance (ticks) from each activation to the nearest peak of f.

    Sinusoid peaks are taken in continuous time; table peaks are every tick
    holding the table maximum. A constant driver peaks everywhere, giving 0.
    With per-agent waveforms each activated node is measured against its
    own peak.
    """
    if not schedule.events or not any(nodes for _, nodes in schedule.events):
        raise EmptySchedule("activation schedule has no events")
    if driver.kind == "constant":
        return 0.0
    if driver.kind == "piecewise":
        top = max(driver.table)
        peaks = [i for i, v in enumerate(driver.table) if v == top]
        period = float(len(driver.table))
        dists = [_cyclic_distance(t, peaks, period) for t, _ in schedule.events]
        return float(np.mean(dists))
    dists = []
    for t, nodes in schedule.events:
        agents = sorted(nodes) if driver.per_agent is not None else [0]
        for a in agents:
            m, _ = driver._mn(a)
            dists.append(_cyclic_distance(t, [peak_phase(driver, a)], 2 * math.pi / abs(m)))
    return float(np.mean(dists))
