"""Seeded Monte Carlo experiment grids: phase diagrams and method comparisons.

A plan is a base model config plus sweep axes given as dotted paths into that
config (``"alpha.in"``, ``"attr_mean.polygon"``).  Trial seeds are derived
from (master seed, cell index, trial index) alone, so results do not depend
on how trials are scheduled over workers.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import itertools
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .cluster import ClusterConfig, iterate
from .errors import CsbmError, ValidationError
from .expfam import Gaussian, family_from_dict
from .info import min_divergence
from .metrics import ari, exact_recovery
from .model import generate, spec_from_config
from .spectral import initialize

__all__ = [
    "ExperimentPlan",
    "PhaseDiagram",
    "Comparison",
    "PRESETS",
    "preset",
    "plan_from_dict",
    "run_phase_diagram",
    "run_comparison",
    "threshold_along",
    "config_hash",
    "version_string",
]

METRICS = ("exact_recovery", "ari")
BASE_METHODS = ("bregman", "network_only", "attribute_only")


def version_string():
    return f"csbm {__version__}"


def config_hash(obj) -> str:
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def set_path(cfg: dict, path: str, value):
    """Return a copy of ``cfg`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(cfg)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value
    return out


@dataclass
class ExperimentPlan:
    base: dict
    axes: dict
    trials: int
    seed: int = 0
    metric: str = "exact_recovery"
    methods: list = field(default_factory=lambda: ["bregman"])
    init: str = "spectral"
    max_iter: int = 100
    edge_factor: float = 1.0
    threshold_axis: str | None = None
    name: str = "experiment"

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError("trials must be a positive integer")
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}")
        if not self.axes:
            raise ValidationError("plan needs at least one sweep axis")
        for name, values in self.axes.items():
            if not isinstance(values, (list, tuple)) or not values:
                raise ValidationError(f"axis {name!r} needs a nonempty list of values")
        for m in self.methods:
            parse_method(m)
        # validate the base config once, with the first grid point
        spec_from_config(self.cell_config(self.cells()[0]))

    @property
    def axis_names(self):
        return list(self.axes)

    def cells(self):
        return list(itertools.product(*self.axes.values()))

    def cell_config(self, values):
        cfg = self.base
        for name, v in zip(self.axis_names, values):
            cfg = set_path(cfg, name, v)
        return cfg

    def to_dict(self):
        return asdict(self)


def plan_from_dict(obj) -> ExperimentPlan:
    if not isinstance(obj, dict):
        raise ValidationError("plan must be an object")
    if "preset" in obj:
        plan = preset(obj["preset"])
        overrides = {k: v for k, v in obj.items() if k != "preset"}
        return ExperimentPlan(**{**plan.to_dict(), **overrides})
    try:
        return ExperimentPlan(**obj)
    except TypeError as exc:
        raise ValidationError(f"bad plan: {exc}") from exc


def parse_method(method: str):
    """``bregman[:weight=<kind>][:attr=<kind>]``, ``network_only`` or ``attribute_only``.

    A kind of ``gaussian-auto`` uses a Gaussian divergence whose variance is
    the empirical variance of the observed values.
    """
    parts = method.split(":")
    if parts[0] not in BASE_METHODS:
        raise ValidationError(f"unknown method {method!r}")
    overrides = {}
    for p in parts[1:]:
        key, _, kind = p.partition("=")
        if key not in ("weight", "attr") or not kind:
            raise ValidationError(f"bad method option {p!r} in {method!r}")
        if kind != "gaussian-auto":
            family_from_dict({"kind": kind}, f"method {method}")
        overrides[key] = kind
    return parts[0], overrides


def _override_family(kind, values, like):
    if kind is None:
        return like
    if kind == "gaussian-auto":
        var = float(np.var(values)) if np.size(values) > 1 else 1.0
        dim = like.dim if like is not None else 1
        return Gaussian(sigma2=var if var > 0 else 1.0, d=dim)
    fam = family_from_dict({"kind": kind})
    if kind == "gaussian" and like is not None and like.dim > 1:
        fam = Gaussian(d=like.dim)
    return fam


def run_method(method, ds, spec, seed, init="spectral", max_iter=100, edge_factor=1.0):
    """Cluster ``ds`` with one method; returns labels."""
    base, overrides = parse_method(method)
    K = spec.K
    if base == "network_only":
        return initialize(ds, K, method=init, seed=seed, part="network")
    wf = _override_family(overrides.get("weight"), ds.edge_weights, spec.weight_family)
    af = _override_family(overrides.get("attr"), ds.Y, spec.attr_family)
    if base == "attribute_only":
        z0 = initialize(ds, K, method=init, seed=seed, part="attributes")
        cfg = ClusterConfig(max_iter=max_iter, edge_factor=0.0)
    else:
        z0 = initialize(ds, K, method=init, seed=seed)
        cfg = ClusterConfig(max_iter=max_iter, edge_factor=edge_factor)
    return iterate(ds, z0, wf, af, cfg, K=K).labels


def _trial(args):
    cfg, seeds, methods, init, max_iter, edge_factor = args
    out = {}
    try:
        spec = spec_from_config(cfg)
        ss = np.random.SeedSequence(seeds)
        gen_seed, init_seed = ss.spawn(2)
        ds = generate(spec, gen_seed)
        init_int = int(init_seed.generate_state(1)[0])
        for m in methods:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                z = run_method(m, ds, spec, init_int, init, max_iter, edge_factor)
            out[m] = (ari(ds.z_true, z), bool(exact_recovery(ds.z_true, z)))
    except (CsbmError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}
    return out


def _run_trials(plan: ExperimentPlan, workers=1):
    cells = plan.cells()
    tasks = []
    for c, values in enumerate(cells):
        cfg = plan.cell_config(values)
        for t in range(plan.trials):
            tasks.append((cfg, [plan.seed, c, t], plan.methods, plan.init, plan.max_iter, plan.edge_factor))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_trial(t) for t in tasks]
    grouped = [results[c * plan.trials : (c + 1) * plan.trials] for c in range(len(cells))]
    return cells, grouped


def _scaled(cfg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return min_divergence(spec_from_config(cfg)).scaled


def threshold_along(cfg_at, lo, hi, tol=1e-4):
    """Value x in [lo, hi] where the scaled divergence of ``cfg_at(x)`` crosses 1.

    Bisection; NaN when there is no sign change on the interval.
    """
    f_lo = _scaled(cfg_at(lo)) - 1
    f_hi = _scaled(cfg_at(hi)) - 1
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        return math.nan
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = _scaled(cfg_at(mid)) - 1
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class Cell:
    values: tuple
    scaled: float
    trials: int
    failures: int
    mean: float
    std: float
    errors: list = field(default_factory=list)


@dataclass
class PhaseDiagram:
    plan: ExperimentPlan
    cells: list
    curve: list  # (other-axis value, threshold value)

    def grid(self):
        shape = tuple(len(v) for v in self.plan.axes.values())
        return np.array([c.mean for c in self.cells]).reshape(shape)

    def scaled_grid(self):
        shape = tuple(len(v) for v in self.plan.axes.values())
        return np.array([c.scaled for c in self.cells]).reshape(shape)


def _metric_values(results, method, metric):
    vals = [r[method][1 if metric == "exact_recovery" else 0] for r in results if "error" not in r]
    return np.asarray(vals, dtype=float)


def run_phase_diagram(plan: ExperimentPlan, workers=1, curve_points=41) -> PhaseDiagram:
    """Run every cell of a (typically 2-axis) grid and attach the theoretical curve."""
    method = plan.methods[0]
    cells, grouped = _run_trials(plan, workers)
    out = []
    for values, results in zip(cells, grouped):
        vals = _metric_values(results, method, plan.metric)
        errors = [r["error"] for r in results if "error" in r]
        out.append(
            Cell(
                values=tuple(values),
                scaled=_scaled(plan.cell_config(values)),
                trials=len(results),
                failures=len(errors),
                mean=float(vals.mean()) if vals.size else math.nan,
                std=float(vals.std()) if vals.size else math.nan,
                errors=errors,
            )
        )
    curve = _threshold_curve(plan, curve_points)
    return PhaseDiagram(plan=plan, cells=out, curve=curve)


def _threshold_curve(plan, points):
    names = plan.axis_names
    axis = plan.threshold_axis or names[0]
    if axis not in names:
        raise ValidationError(f"threshold axis {axis!r} is not a sweep axis")
    vals = plan.axes[axis]
    lo, hi = float(min(vals)), float(max(vals))
    others = [n for n in names if n != axis]
    if not others:
        return [(math.nan, threshold_along(lambda x: set_path(plan.base, axis, x), lo, hi))]
    other = others[0]
    o_vals = plan.axes[other]
    rest = {n: plan.axes[n][0] for n in others[1:]}
    curve = []
    for o in np.linspace(float(min(o_vals)), float(max(o_vals)), points):
        def cfg_at(x, o=o):
            cfg = set_path(plan.base, other, float(o))
            for n, v in rest.items():
                cfg = set_path(cfg, n, v)
            return set_path(cfg, axis, float(x))

        curve.append((float(o), threshold_along(cfg_at, lo, hi)))
    return curve


@dataclass
class Comparison:
    plan: ExperimentPlan
    rows: list  # dicts: axis values, method, mean, std, trials, failures


def run_comparison(plan: ExperimentPlan, workers=1) -> Comparison:
    cells, grouped = _run_trials(plan, workers)
    rows = []
    for values, results in zip(cells, grouped):
        errors = sum("error" in r for r in results)
        for m in plan.methods:
            vals = _metric_values(results, m, plan.metric)
            rows.append(
                {
                    "values": tuple(values),
                    "method": m,
                    "mean": float(vals.mean()) if vals.size else math.nan,
                    "std": float(vals.std()) if vals.size else math.nan,
                    "trials": len(results),
                    "failures": errors,
                }
            )
    return Comparison(plan=plan, rows=rows)


# Output ---------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(round(x, 12))
    return str(x)


def _header(plan):
    return [f"# {version_string()}", f"# config_sha256={config_hash(plan.to_dict())}"]


def phase_csv(diagram: PhaseDiagram) -> str:
    buf = io.StringIO()
    for line in _header(diagram.plan):
        buf.write(line + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(diagram.plan.axis_names + ["scaled_divergence", "trials", "failures", "mean", "std"])
    for c in diagram.cells:
        wr.writerow([_fmt(v) for v in c.values] + [_fmt(c.scaled), c.trials, c.failures, _fmt(c.mean), _fmt(c.std)])
    return buf.getvalue()


def curve_csv(diagram: PhaseDiagram) -> str:
    names = diagram.plan.axis_names
    axis = diagram.plan.threshold_axis or names[0]
    other = next((n for n in names if n != axis), "none")
    buf = io.StringIO()
    for line in _header(diagram.plan):
        buf.write(line + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([other, axis])
    for o, x in diagram.curve:
        wr.writerow([_fmt(o), _fmt(x)])
    return buf.getvalue()


def comparison_csv(comp: Comparison) -> str:
    """Long format: one row per (cell, method)."""
    buf = io.StringIO()
    for line in _header(comp.plan):
        buf.write(line + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(comp.plan.axis_names + ["method", "mean", "std", "trials", "failures"])
    for r in comp.rows:
        wr.writerow([_fmt(v) for v in r["values"]] + [r["method"], _fmt(r["mean"]), _fmt(r["std"]), r["trials"], r["failures"]])
    return buf.getvalue()


def comparison_table_csv(comp: Comparison) -> str:
    """Wide format: methods as rows, swept values as columns, cells 'mean (std)'."""
    buf = io.StringIO()
    for line in _header(comp.plan):
        buf.write(line + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    cells = comp.plan.cells()
    wr.writerow(["method"] + ["/".join(_fmt(v) for v in c) for c in cells])
    for m in comp.plan.methods:
        row = [m]
        for c in cells:
            r = next(r for r in comp.rows if r["method"] == m and r["values"] == tuple(c))
            row.append(f"{r['mean'] + 0.0:.2f} ({r['std']:.2f})")
        wr.writerow(row)
    return buf.getvalue()


# Presets for the synthetic benchmark experiments -----------------------

_G2 = {"kind": "gaussian", "params": {"dim": 2}}


def _presets():
    return {
        # binary weights, Gaussian attributes at (+-r sqrt(log n), 0)
        "binary-phase": ExperimentPlan(
            name="binary-phase",
            base={
                "n": 500, "K": 2, "alpha": {"in": 1.0, "out": 1.0},
                "attr_family": _G2, "attr_mean": {"polygon": 0.0}, "attr_scale": "sqrt_log_n",
            },
            axes={"alpha.in": [1.0, 3.0, 5.0, 7.0, 9.0, 11.0], "attr_mean.polygon": [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]},
            trials=50,
        ),
        # zero-inflated Gaussian weights, attributes on a triangle of radius r sqrt(log n)
        "gaussian-weight-phase": ExperimentPlan(
            name="gaussian-weight-phase",
            base={
                "n": 600, "K": 3, "alpha": 5.0,
                "weight_family": {"kind": "gaussian"}, "weight_mean": {"in": 0.0, "out": 0.0},
                "attr_family": _G2, "attr_mean": {"polygon": 0.0}, "attr_scale": "sqrt_log_n",
            },
            axes={"weight_mean.in": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0], "attr_mean.polygon": [0.0, 0.4, 0.8, 1.2, 1.6, 2.0]},
            trials=50,
        ),
        "poisson-edge-sweep": ExperimentPlan(
            name="poisson-edge-sweep",
            base={
                "n": 100, "K": 2, "edge_prob": {"in": 0.05, "out": 0.03},
                "weight_family": {"kind": "poisson"}, "weight_mean": {"in": 5.0, "out": 1.0},
                "attr_family": _G2, "attr_mean": {"polygon": 1.0},
            },
            axes={"edge_prob.in": [0.03, 0.05, 0.07, 0.09, 0.11]},
            trials=25, metric="ari", methods=["bregman", "network_only", "attribute_only"],
        ),
        "poisson-weight-sweep": ExperimentPlan(
            name="poisson-weight-sweep",
            base={
                "n": 100, "K": 2, "edge_prob": {"in": 0.07, "out": 0.04},
                "weight_family": {"kind": "poisson"}, "weight_mean": {"in": 1.0, "out": 1.0},
                "attr_family": _G2, "attr_mean": {"polygon": 1.0},
            },
            axes={"weight_mean.in": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]},
            trials=25, metric="ari", methods=["bregman", "network_only", "attribute_only"],
        ),
        # varying the within-block rate a, r = 1
        "edge-sweep": ExperimentPlan(
            name="edge-sweep",
            base={
                "n": 600, "K": 2, "alpha": {"in": 5.0, "out": 5.0},
                "attr_family": _G2, "attr_mean": {"polygon": 1.0},
            },
            axes={"alpha.in": [5.0, 7.0, 9.0, 11.0, 13.0, 15.0]},
            trials=60, metric="ari", methods=["bregman", "network_only", "attribute_only"],
        ),
        # varying r with a = 8
        "attribute-sweep": ExperimentPlan(
            name="attribute-sweep",
            base={
                "n": 600, "K": 2, "alpha": {"in": 8.0, "out": 5.0},
                "attr_family": _G2, "attr_mean": {"polygon": 0.0},
            },
            axes={"attr_mean.polygon": [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]},
            trials=60, metric="ari", methods=["bregman", "network_only", "attribute_only"],
        ),
        # divergence robustness: Poisson weights clustered with several divergences
        "poisson-divergences": ExperimentPlan(
            name="poisson-divergences",
            base={
                "n": 400, "K": 4, "edge_prob": {"in": 0.04, "out": 0.01},
                "weight_family": {"kind": "poisson"}, "weight_mean": {"in": 1.0, "out": 5.0},
                "attr_family": _G2, "attr_mean": {"polygon": 2.0},
            },
            axes={"weight_mean.in": [1.0, 3.0, 5.0, 7.0, 9.0]},
            trials=20, metric="ari",
            methods=["bregman", "bregman:weight=gaussian-auto", "bregman:weight=exponential"],
        ),
        "poisson-attr-divergences": ExperimentPlan(
            name="poisson-attr-divergences",
            base={
                "n": 400, "K": 2, "edge_prob": {"in": 0.04, "out": 0.01},
                "weight_family": {"kind": "gaussian"}, "weight_mean": {"in": 2.0, "out": 0.0},
                "attr_family": {"kind": "poisson"}, "attr_mean": [[1.0], [3.0]],
            },
            axes={"attr_mean": [[[v], [3.0]] for v in (1.0, 2.0, 4.0, 5.0, 6.0)]},
            trials=20, metric="ari",
            methods=["bregman", "bregman:attr=gaussian-auto"],
        ),
        # weighted networks with exponential weights and attributes
        "exponential-sweep": ExperimentPlan(
            name="exponential-sweep",
            base={
                "n": 600, "K": 2, "alpha": 5.0,
                "weight_family": {"kind": "exponential"}, "weight_mean": {"in": 1.0, "out": 1.0},
                "attr_family": {"kind": "exponential"}, "attr_mean": [[1.0], [2.0]],
            },
            axes={"weight_mean.in": [1.0, 2.0, 3.0, 4.0, 5.0]},
            trials=20, metric="ari", methods=["bregman", "network_only", "attribute_only"],
        ),
    }


PRESETS = tuple(_presets())


def preset(name, **overrides) -> ExperimentPlan:
    plans = _presets()
    if name not in plans:
        raise ValidationError(f"unknown preset {name!r} (choose from {sorted(plans)})")
    plan = plans[name]
    if overrides:
        plan = ExperimentPlan(**{**plan.to_dict(), **overrides})
    return plan


def default_workers():
    return max(1, min(8, os.cpu_count() or 1))
