"""Command-line interface.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io as csbm_io
from .cluster import ClusterConfig, iterate
from .errors import NumericError, ParseError, ValidationError
from .experiments import (
    PRESETS,
    comparison_csv,
    comparison_table_csv,
    config_hash,
    curve_csv,
    default_workers,
    phase_csv,
    plan_from_dict,
    preset,
    run_comparison,
    run_phase_diagram,
    version_string,
)
from .expfam import Gaussian, family_from_dict
from .info import chernoff_curve, min_divergence
from .metrics import ari, exact_recovery, loss
from .model import generate, spec_from_config, spec_to_config
from .spectral import initialize

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def _provenance(obj):
    return {"version": version_string(), "config_sha256": config_hash(obj)}


def _write_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _file_digest(path, default_name=None):
    """Name and content hash of an input, so reports do not depend on its location."""
    path = Path(path)
    if path.is_dir() and default_name is not None:
        path = path / default_name
    return {"name": path.name, "sha256": hashlib.sha256(path.read_bytes()).hexdigest()}


def _family(text, field_name, dim=1):
    """Family from a name (``poisson``), ``gaussian:sigma2=2`` or a JSON object."""
    if text is None:
        return None
    text = text.strip()
    if text.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{field_name}: {exc.msg}") from exc
    else:
        kind, _, rest = text.partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            key, _, value = item.partition("=")
            try:
                params[key] = float(value)
            except ValueError:
                raise ValidationError(f"{field_name}: bad parameter {item!r}") from None
        obj = {"kind": kind, "params": params}
    if obj.get("kind") == "gaussian":
        obj = {**obj, "params": {"dim": dim, **obj.get("params", {})}}
    return family_from_dict(obj, field_name)


# Subcommands ----------------------------------------------------------------


def cmd_generate(args):
    cfg = csbm_io.load_config(args.config)
    spec = spec_from_config(cfg)
    seed = 0 if args.seed is None else args.seed
    ds = generate(spec, seed)
    out = Path(args.out)
    csbm_io.save_dataset(ds, out)
    record = {"config": spec_to_config(spec), "seed": seed}
    report = {**_provenance(record), **record, "n": ds.n, "edges": ds.m}
    _write_json(report, out / "generate.json")
    print(json.dumps({"out": str(out), "n": ds.n, "edges": ds.m}))
    return 0


def cmd_cluster(args):
    ds = csbm_io.load_dataset(args.edges, attributes=args.attributes)
    K = args.k
    wf = _family(args.weight_family, "weight-family")
    if ds.binary:
        wf = None
    elif wf is None:
        raise ValidationError("weighted edges need --weight-family")
    af = None
    if ds.d > 0:
        af = _family(args.attr_family or "gaussian", "attr-family", dim=ds.d)
        if isinstance(af, Gaussian) and af.dim != ds.d:
            af = Gaussian(sigma2=af.sigma2, d=ds.d)
    seed = 0 if args.seed is None else args.seed
    if args.init.startswith("file:"):
        z0 = csbm_io.read_labels(args.init[5:])
        if z0.size != ds.n:
            raise ValidationError(f"init file has {z0.size} labels, expected {ds.n}")
    else:
        z0 = initialize(ds, K, method=args.init, seed=seed)
    cfg = ClusterConfig(max_iter=args.max_iter, seed=seed)
    result = iterate(ds, z0, wf, af, cfg, K=K)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csbm_io.write_labels(result.labels, out / "labels.txt")
    record = {
        "edges": _file_digest(args.edges, csbm_io.EDGES_NAME),
        "attributes": None if args.attributes is None else _file_digest(args.attributes),
        "k": K,
        "weight_family": args.weight_family,
        "attr_family": args.attr_family,
        "init": args.init,
        "seed": seed,
        "max_iter": args.max_iter,
    }
    report = {**_provenance(record), "args": record, **result.report()}
    if ds.z_true is not None:
        report["ari_vs_file_labels"] = ari(ds.z_true, result.labels)
    _write_json(report, out / "report.json")
    print(json.dumps({"labels": str(out / "labels.txt"), "n_iter": result.n_iter, "converged": result.converged}))
    return 0


def cmd_evaluate(args):
    z = csbm_io.read_labels(args.truth)
    z_hat = csbm_io.read_labels(args.pred)
    print(json.dumps({"loss": loss(z, z_hat), "ari": ari(z, z_hat), "exact": bool(exact_recovery(z, z_hat))}))
    return 0


def cmd_threshold(args):
    cfg = csbm_io.load_config(args.config)
    spec = spec_from_config(cfg)
    report = min_divergence(spec)
    body = {**_provenance(spec_to_config(spec)), **report.to_dict()}
    print(json.dumps(body, sort_keys=True))
    if args.out is not None:
        _write_json(body, Path(args.out) / "threshold.json")
    if args.curve is not None:
        ts = np.linspace(0.0, 1.0, args.points + 2)[1:-1]
        lines = [f"# {version_string()}", f"# config_sha256={body['config_sha256']}", "# t a b CH_t scaled"]
        scale = spec.n / np.log(spec.n)
        for a in range(spec.K):
            for b in range(a + 1, spec.K):
                for t, v in zip(ts, chernoff_curve(spec, a, b, ts)):
                    lines.append(f"{t:.6f} {a} {b} {v!r} {v * scale!r}")
        Path(args.curve).write_text("\n".join(lines) + "\n")
    return 0


def _plan(args):
    if (args.preset is None) == (args.plan is None):
        raise ValidationError("give exactly one of --preset or --plan")
    if args.preset is not None:
        plan = preset(args.preset)
    else:
        plan = plan_from_dict(csbm_io.load_config(args.plan))
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        plan = plan_from_dict({**plan.to_dict(), **overrides})
    return plan


def _finish_experiment(kind, plan, files, out, started, plot):
    manifest = {**_provenance(plan.to_dict()), "kind": kind, "plan": plan.to_dict(), "files": sorted(files)}
    _write_json(manifest, out / "run.json")
    print(json.dumps({"out": str(out), "files": sorted(files), "figure": plot}), flush=True)
    print(f"finished in {time.perf_counter() - started:.1f} s", file=sys.stderr)


def cmd_phase_diagram(args):
    plan = _plan(args)
    started = time.perf_counter()
    diagram = run_phase_diagram(plan, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "phase_diagram.csv").write_text(phase_csv(diagram))
    (out / "threshold_curve.csv").write_text(curve_csv(diagram))
    files = ["phase_diagram.csv", "threshold_curve.csv"]
    plot = None
    if not args.no_plot and len(plan.axes) == 2:
        from .plotting import plot_phase_diagram

        plot_phase_diagram(diagram, out / "phase_diagram.png")
        plot = "phase_diagram.png"
    _finish_experiment("phase-diagram", plan, files, out, started, plot)
    return 0


def cmd_compare(args):
    plan = _plan(args)
    if args.metric is not None:
        plan = plan_from_dict({**plan.to_dict(), "metric": args.metric})
    if args.methods:
        plan = plan_from_dict({**plan.to_dict(), "methods": args.methods})
    started = time.perf_counter()
    comp = run_comparison(plan, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(comparison_csv(comp))
    (out / "comparison_table.csv").write_text(comparison_table_csv(comp))
    files = ["comparison.csv", "comparison_table.csv"]
    plot = None
    if not args.no_plot:
        from .plotting import plot_comparison

        plot_comparison(comp, out / "comparison.png")
        plot = "comparison.png"
    _finish_experiment("compare", plan, files, out, started, plot)
    return 0


# Parser ---------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    parser = argparse.ArgumentParser(prog="csbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=version_string())
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--workers", type=int, default=default_workers(), help="worker processes")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="sample a dataset from a model config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_generate, default_out="data")

    p = sub.add_parser("cluster", parents=[common], help="recover communities")
    p.add_argument("--edges", required=True, help="edge file or dataset directory")
    p.add_argument("--attributes", default=None)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--weight-family", default=None, help="e.g. poisson, gaussian:sigma2=2, or a JSON object")
    p.add_argument("--attr-family", default=None, help="defaults to gaussian")
    p.add_argument("--init", default="spectral", help="spectral, random or file:<path>")
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_cluster, default_out="clusters")

    p = sub.add_parser("evaluate", parents=[common], help="compare two label files")
    p.add_argument("truth")
    p.add_argument("pred")
    p.set_defaults(func=cmd_evaluate, default_out=None)

    p = sub.add_parser("threshold", parents=[common], help="exact-recovery divergence of a model")
    p.add_argument("--config", required=True)
    p.add_argument("--curve", default=None, help="write the t -> CH_t curves to this file")
    p.add_argument("--points", type=int, default=99)
    p.set_defaults(func=cmd_threshold, default_out=None)

    for name, func, help_text in (
        ("phase-diagram", cmd_phase_diagram, "recovery-rate grid with threshold curve"),
        ("compare", cmd_compare, "mean ARI of several methods over a sweep"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--preset", choices=PRESETS, default=None)
        p.add_argument("--plan", default=None, help="JSON/TOML experiment plan")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--no-plot", action="store_true")
        if name == "compare":
            p.add_argument("--metric", choices=["ari", "exact_recovery"], default=None)
            p.add_argument("--methods", nargs="+", default=None)
        p.set_defaults(func=func, default_out=name)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out is None and args.default_out is not None:
        args.out = args.default_out
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"csbm: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"csbm: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
