"""YAML run configuration.

One document describes a run. Every section is optional and falls back to
the defaults shown::

    seed: 0
    horizon: 50
    game: {alpha: 0.3, beta: 0.3, x: 0.2, y: 0.9}
    network: {topology: small-world, n: 50, d: 4, p_rewire: 0.3}   # or ring, or edge-list + path
    population:
      active_fraction: 1.0
      thresholds: {law: uniform, lo: 0.0, hi: 0.5}   # constant: {law: constant, value: c}; explicit: values: [...]
      initial_actors: 1                              # count, or a list of node ids
      closed_neighborhood: false
    linkage: {a_p: 0.0, b_p: 1.0, a_T: 0.0, b_T: 1.0}
    driver: {kind: constant, c: 0.5}                 # periodic: period, peak_at; sinusoid: m, n[, period_T]; piecewise: table
    activation: {kind: none}                         # explicit: events [[tick, [nodes]], ...]; periodic: period, phase, count
    output: {snapshots: [0, 1, 2, 5, 10]}
    sweep: {axes: {alpha: [0.1, 0.3, 0.5]}, replicates: 1, base_seed: 0}
    calibration: {n_draws: 5000, tolerance_quantile: 0.02, month_len: 30, ...}

A ``manifest.json`` written by the CLI is accepted in place of a YAML file;
its ``config`` block is read back and the recorded seed reused.

Errors raise `ConfigError` carrying the offending line when it is known.
"""
from __future__ import annotations

import json
import math

import yaml

from .calibrate import DEFAULT_PRIORS, PARAM_NAMES, CalibrationConfig
from .drivers import CycleDriver
from .dynamics import AffineLinkage, ThresholdInit
from .errors import ConfigError, SweepSpecError
from .game import GameParams
from .scenario import ActivationPlan, NetworkRecipe, Scenario
from .sweep import SweepSpec

__all__ = ["RunConfig", "load_config", "parse_config", "scenario_to_dict"]

SECTIONS = ("seed", "horizon", "game", "network", "population", "linkage", "driver", "activation", "output",
            "sweep", "calibration")


def _to_python(node, path, lines):
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = knode.value
            if key in out:
                raise ConfigError(f"duplicate key {key!r}", knode.start_mark.line + 1)
            lines[path + (key, "__key__")] = knode.start_mark.line + 1
            out[key] = _to_python(vnode, path + (key,), lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, path + (i,), lines) for i, v in enumerate(node.value)]
    return yaml.constructor.SafeConstructor().construct_object(node, deep=True)


class RunConfig:
    """Parsed document plus line numbers, with typed accessors."""

    def __init__(self, data, lines=None, path=None, manifest=None):
        if data is None:
            data = {}
        self.data = data
        self.lines = lines or {}
        self.path = path
        self.manifest = manifest
        if not isinstance(data, dict):
            self.fail("top level must be a mapping", ())
        self._check_keys((), self.data, SECTIONS)

    # -- error helpers
    def line(self, where):
        where = tuple(where)
        while where:
            if where in self.lines:
                return self.lines[where]
            where = where[:-1]
        return self.lines.get(())

    def fail(self, msg, where):
        raise ConfigError(msg, self.line(where), self.path)

    def _check_keys(self, where, mapping, allowed):
        for key in mapping:
            if key not in allowed:
                line = self.lines.get(tuple(where) + (key, "__key__"), self.line(where))
                raise ConfigError(f"unknown key {key!r} in {'/'.join(map(str, where)) or 'top level'}; "
                                  f"expected one of {', '.join(allowed)}", line, self.path)

    def section(self, name, allowed):
        sec = self.data.get(name, {})
        if sec is None:
            sec = {}
        if not isinstance(sec, dict):
            self.fail(f"section {name!r} must be a mapping", (name,))
        self._check_keys((name,), sec, allowed)
        return sec

    def number(self, where, value, kind=float, lo=None, hi=None, lo_open=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{'/'.join(map(str, where))}: expected a number, got {value!r}", where)
        if kind is int and (isinstance(value, float) and not value.is_integer()):
            self.fail(f"{'/'.join(map(str, where))}: expected an integer, got {value!r}", where)
        value = kind(value)
        if isinstance(value, float) and not math.isfinite(value):
            self.fail(f"{'/'.join(map(str, where))}: must be finite", where)
        if lo is not None and (value < lo or (lo_open and value == lo)):
            self.fail(f"{'/'.join(map(str, where))}: must be {'>' if lo_open else '>='} {lo}, got {value}", where)
        if hi is not None and value > hi:
            self.fail(f"{'/'.join(map(str, where))}: must be <= {hi}, got {value}", where)
        return value

    def get(self, sec_name, sec, key, default, kind=float, **bounds):
        if key not in sec:
            return default
        return self.number((sec_name, key), sec[key], kind, **bounds)

    def choice(self, where, value, options):
        if value not in options:
            self.fail(f"{'/'.join(map(str, where))}: expected one of {', '.join(map(str, options))}, got {value!r}",
                      where)
        return value

    def build(self, where, fn, *args, **kwargs):
        """Call a constructor, turning its ValueError into a located ConfigError."""
        try:
            return fn(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            self.fail(f"{'/'.join(map(str, where))}: {exc}", where)

    # -- top-level scalars
    @property
    def seed(self) -> int:
        if "seed" not in self.data:
            return 0
        return self.number(("seed",), self.data["seed"], int, lo=0)

    @property
    def horizon(self) -> int:
        if "horizon" not in self.data:
            return 50
        return self.number(("horizon",), self.data["horizon"], int, lo=1)

    # -- sections
    def game(self) -> GameParams:
        sec = self.section("game", ("alpha", "beta", "x", "y"))
        vals = {
            "alpha": self.get("game", sec, "alpha", 0.3, lo=0, lo_open=True),
            "beta": self.get("game", sec, "beta", 0.3, lo=0, lo_open=True),
            "x": self.get("game", sec, "x", 0.2, lo=0, hi=1),
            "y": self.get("game", sec, "y", 0.9, lo=0, hi=1),
        }
        return self.build(("game",), GameParams, **vals)

    def network(self) -> NetworkRecipe:
        sec = self.section("network", ("topology", "n", "d", "p_rewire", "path"))
        topo = self.choice(("network", "topology"), sec.get("topology", "small-world"),
                           ("small-world", "ring", "edge-list"))
        path = sec.get("path")
        if topo == "edge-list" and not isinstance(path, str):
            self.fail("network/path: edge-list topology needs a file path", ("network",))
        return self.build(("network",), NetworkRecipe, topo, self.get("network", sec, "n", 50, int, lo=2),
                          self.get("network", sec, "d", 4, int, lo=1),
                          self.get("network", sec, "p_rewire", 0.3, lo=0, hi=1), path)

    def thresholds(self, pop) -> ThresholdInit:
        where = ("population", "thresholds")
        sec = pop.get("thresholds", {}) or {}
        if not isinstance(sec, dict):
            self.fail("population/thresholds must be a mapping", where)
        self._check_keys(where, sec, ("law", "lo", "hi", "value", "values"))
        law = self.choice(where + ("law",), sec.get("law", "uniform"), ("uniform", "constant", "explicit"))
        if law == "uniform":
            lo = self.number(where + ("lo",), sec.get("lo", 0.0), lo=0, hi=1)
            hi = self.number(where + ("hi",), sec.get("hi", 0.5), lo=0, hi=1)
            return self.build(where, ThresholdInit.uniform, lo, hi)
        if law == "constant":
            if "value" not in sec:
                self.fail("population/thresholds: constant law needs 'value'", where)
            return ThresholdInit.constant(self.number(where + ("value",), sec["value"], lo=0, hi=1))
        vals = sec.get("values")
        if not isinstance(vals, list) or not vals:
            self.fail("population/thresholds: explicit law needs a non-empty 'values' list", where)
        return ThresholdInit.explicit([self.number(where + ("values", i), v, lo=0, hi=1) for i, v in enumerate(vals)])

    def population(self) -> dict:
        sec = self.section("population", ("active_fraction", "thresholds", "initial_actors", "closed_neighborhood"))
        actors = sec.get("initial_actors", 1)
        where = ("population", "initial_actors")
        if isinstance(actors, list):
            actors = tuple(self.number(where + (i,), v, int, lo=0) for i, v in enumerate(actors))
        else:
            actors = self.number(where, actors, int, lo=0)
        closed = sec.get("closed_neighborhood", False)
        if not isinstance(closed, bool):
            self.fail("population/closed_neighborhood must be true or false", ("population", "closed_neighborhood"))
        return {
            "active_fraction": self.get("population", sec, "active_fraction", 1.0, lo=0, hi=1),
            "threshold_init": self.thresholds(sec),
            "initial_actors": actors,
            "closed_neighborhood": closed,
        }

    def linkage(self) -> AffineLinkage:
        sec = self.section("linkage", ("a_p", "b_p", "a_T", "b_T"))
        return AffineLinkage(*(self.get("linkage", sec, k, d) for k, d in
                               (("a_p", 0.0), ("b_p", 1.0), ("a_T", 0.0), ("b_T", 1.0))))

    def driver(self) -> CycleDriver:
        sec = self.section("driver", ("kind", "c", "period", "peak_at", "m", "n", "period_T", "table"))
        kind = self.choice(("driver", "kind"), sec.get("kind", "constant"),
                           ("constant", "periodic", "sinusoid", "piecewise"))
        if kind == "constant":
            return CycleDriver.constant(self.get("driver", sec, "c", 0.5, lo=0, hi=1))
        if kind == "periodic":
            if "period" not in sec:
                self.fail("driver: periodic driver needs 'period'", ("driver",))
            return CycleDriver.periodic(self.get("driver", sec, "period", None, lo=0, lo_open=True),
                                        self.get("driver", sec, "peak_at", 0.0))
        if kind == "sinusoid":
            return self.build(("driver",), CycleDriver, kind="sinusoid", m=self.get("driver", sec, "m", 0.0),
                              n=self.get("driver", sec, "n", 0.0),
                              period_T=self.get("driver", sec, "period_T", None, lo=0, lo_open=True))
        table = sec.get("table")
        if not isinstance(table, list) or not table:
            self.fail("driver: piecewise driver needs a non-empty 'table'", ("driver",))
        vals = [self.number(("driver", "table", i), v, lo=0, hi=1) for i, v in enumerate(table)]
        return CycleDriver(kind="piecewise", table=tuple(vals))

    def activation(self) -> ActivationPlan:
        sec = self.section("activation", ("kind", "events", "period", "phase", "count"))
        kind = self.choice(("activation", "kind"), sec.get("kind", "none"), ("none", "explicit", "periodic"))
        events = ()
        if kind == "explicit":
            raw = sec.get("events")
            if not isinstance(raw, list):
                self.fail("activation: explicit activation needs an 'events' list", ("activation",))
            out = []
            for i, ev in enumerate(raw):
                where = ("activation", "events", i)
                if not (isinstance(ev, list) and len(ev) == 2 and isinstance(ev[1], list)):
                    self.fail("activation/events: each event is [tick, [node, ...]]", where)
                tick = self.number(where + (0,), ev[0], int, lo=0)
                nodes = tuple(self.number(where + (1, j), v, int, lo=0) for j, v in enumerate(ev[1]))
                out.append((tick, nodes))
            events = tuple(out)
        phase = sec.get("phase", "peak")
        if isinstance(phase, bool) or not (phase in ("peak", "trough") or isinstance(phase, int)):
            self.fail("activation/phase: expected peak, trough or an integer tick", ("activation", "phase"))
        period = sec.get("period")
        if period is not None:
            period = self.number(("activation", "period"), period, int, lo=1)
        return ActivationPlan(kind, events, period, phase, self.get("activation", sec, "count", 1, int, lo=1))

    def snapshots(self) -> tuple:
        sec = self.section("output", ("snapshots",))
        snaps = sec.get("snapshots", [0, 1, 2, 5, 10])
        if not isinstance(snaps, list):
            self.fail("output/snapshots must be a list of ticks", ("output", "snapshots"))
        return tuple(self.number(("output", "snapshots", i), v, int, lo=0) for i, v in enumerate(snaps))

    def scenario(self) -> Scenario:
        pop = self.population()
        return self.build((), Scenario, game=self.game(), network=self.network(), linkage=self.linkage(),
                          driver=self.driver(), activation=self.activation(), horizon=self.horizon,
                          seed=self.seed, **pop)

    def sweep(self) -> SweepSpec:
        if "sweep" not in self.data:
            self.fail("missing 'sweep' section", ())
        sec = self.section("sweep", ("axes", "replicates", "base_seed", "horizon"))
        axes = sec.get("axes")
        if not isinstance(axes, dict) or not axes:
            self.fail("sweep/axes: need a mapping of axis name to a list of values", ("sweep", "axes"))
        pairs = []
        for name, values in axes.items():
            where = ("sweep", "axes", name)
            if not isinstance(values, list) or not values:
                self.fail(f"sweep/axes/{name}: need a non-empty list of values", where)
            pairs.append((name, tuple(self.number(where + (i,), v) for i, v in enumerate(values))))
        horizon = sec.get("horizon")
        if horizon is not None:
            horizon = self.number(("sweep", "horizon"), horizon, int, lo=1)
        try:
            return SweepSpec(tuple(pairs), self.scenario(), self.get("sweep", sec, "replicates", 1, int, lo=1),
                             horizon, self.get("sweep", sec, "base_seed", self.seed, int, lo=0))
        except SweepSpecError as exc:
            self.fail(f"sweep: {exc}", ("sweep",))

    def calibration(self) -> CalibrationConfig:
        keys = ("priors", "n_draws", "tolerance_quantile", "month_len", "event_pro_threshold", "kde_bandwidth",
                "mcmc_steps", "mcmc_burn", "proposal_scale", "seed")
        sec = self.section("calibration", keys)
        priors = dict(DEFAULT_PRIORS)
        raw = sec.get("priors", {}) or {}
        if not isinstance(raw, dict):
            self.fail("calibration/priors must be a mapping", ("calibration", "priors"))
        self._check_keys(("calibration", "priors"), raw, PARAM_NAMES)
        for name, pair in raw.items():
            where = ("calibration", "priors", name)
            if not (isinstance(pair, list) and len(pair) == 2):
                self.fail(f"calibration/priors/{name}: expected [lo, hi]", where)
            priors[name] = (self.number(where + (0,), pair[0]), self.number(where + (1,), pair[1]))
        bw = sec.get("kde_bandwidth", "scott")
        if not isinstance(bw, str):
            bw = self.number(("calibration", "kde_bandwidth"), bw, lo=0, lo_open=True)
        defaults = CalibrationConfig()
        return self.build(("calibration",), CalibrationConfig, priors=priors,
                          n_draws=self.get("calibration", sec, "n_draws", defaults.n_draws, int, lo=1),
                          tolerance_quantile=self.get("calibration", sec, "tolerance_quantile",
                                                      defaults.tolerance_quantile),
                          month_len=self.get("calibration", sec, "month_len", defaults.month_len, int, lo=1),
                          event_pro_threshold=self.get("calibration", sec, "event_pro_threshold",
                                                       defaults.event_pro_threshold),
                          kde_bandwidth=bw,
                          mcmc_steps=self.get("calibration", sec, "mcmc_steps", defaults.mcmc_steps, int, lo=1),
                          mcmc_burn=self.get("calibration", sec, "mcmc_burn", defaults.mcmc_burn, int, lo=0),
                          proposal_scale=self.get("calibration", sec, "proposal_scale", defaults.proposal_scale,
                                                  lo=0),
                          seed=self.get("calibration", sec, "seed", self.seed, int, lo=0))

    def with_seed(self, seed: int) -> "RunConfig":
        data = dict(self.data)
        data["seed"] = int(seed)
        return RunConfig(data, self.lines, self.path, self.manifest)


def parse_config(text: str, path=None) -> RunConfig:
    """Parse YAML (or manifest JSON) text."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno, path) from None
        if isinstance(doc, dict) and "subcommand" in doc and "config" in doc:
            return RunConfig(doc["config"], {}, path, manifest=doc)
        return RunConfig(doc, {}, path)
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None, path) from None
    if node is None:
        return RunConfig({}, {}, path)
    lines = {}
    try:
        data = _to_python(node, (), lines)
    except yaml.constructor.ConstructorError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"YAML error: {exc.problem}", mark.line + 1 if mark else None, path) from None
    except ConfigError as exc:
        raise ConfigError(str(exc), exc.line, path) from None
    return RunConfig(data, lines, path)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from None
    return parse_config(text, str(path))


def scenario_to_dict(sc: Scenario) -> dict:
    """Inverse of `RunConfig.scenario`: a document that rebuilds ``sc`` exactly."""
    ti = sc.threshold_init
    if ti.kind == "uniform":
        thr = {"law": "uniform", "lo": ti.lo, "hi": ti.hi}
    elif ti.kind == "constant":
        thr = {"law": "constant", "value": ti.lo}
    else:
        thr = {"law": "explicit", "values": list(ti.values)}
    drv = sc.driver
    if drv.kind == "constant":
        driver = {"kind": "constant", "c": drv.c}
    elif drv.kind == "piecewise":
        driver = {"kind": "piecewise", "table": list(drv.table)}
    elif drv.per_agent is not None:
        raise ValueError("per-agent drivers cannot be written to a config file")
    else:
        driver = {"kind": "sinusoid", "m": drv.m, "n": drv.n, "period_T": drv.period_T}
    act = sc.activation
    activation = {"kind": act.kind, "phase": act.phase, "count": act.count}
    if act.period is not None:
        activation["period"] = act.period
    if act.kind == "explicit":
        activation["events"] = [[int(t), [int(v) for v in nodes]] for t, nodes in act.events]
    net = sc.network
    network = {"topology": net.topology, "n": net.n, "d": net.d, "p_rewire": net.p_rewire}
    if net.path:
        network["path"] = net.path
    actors = sc.initial_actors
    return {
        "seed": sc.seed,
        "horizon": sc.horizon,
        "game": {"alpha": sc.game.alpha, "beta": sc.game.beta, "x": sc.game.x, "y": sc.game.y},
        "network": network,
        "population": {
            "active_fraction": sc.active_fraction,
            "thresholds": thr,
            "initial_actors": actors if isinstance(actors, int) else [int(v) for v in actors],
            "closed_neighborhood": sc.closed_neighborhood,
        },
        "linkage": {"a_p": sc.linkage.a_p, "b_p": sc.linkage.b_p, "a_T": sc.linkage.a_T, "b_T": sc.linkage.b_T},
        "driver": driver,
        "activation": activation,
    }
