"""Command line entry point: ``otgeodesic <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .data import SimplexWeights, harden
from .datagen import checkerboard, gaussian_mixture
from .errors import BadSpecError, BadWeightsError, DatasetFormatError, SolverError, ValidationError
from .geodesic import combine, mccann_dataset
from .io import RunConfig, load_dataset, load_features, parse_key_values, save_dataset
from .maps import barycentric_map, batched_barycentric_map, knn_pseudolabel
from .otdd import otdd
from .projection import build_projection_problem, simplex_grid, solve_projection_weights, surrogate
from .svg import write_svg

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


# ---------------------------------------------------------------------------
# generator spec files


def _floats(value, lineno):
    try:
        return [float(v) for v in value.split(",")]
    except ValueError:
        raise BadSpecError(f"expected comma-separated numbers, got {value!r}", lineno) from None


def _matrices(value, lineno):
    """``a,b;c,d`` style rows, ``|`` between matrices."""
    return [np.array([_floats(r, lineno) for r in m.split(";")]) for m in value.split("|")]


def dataset_from_spec(text, id="generated"):
    """Build a dataset from a ``key = value`` generator description.

    ``kind = checkerboard`` takes ``grid``, ``spacing``, ``std``;
    ``kind = mixture`` takes ``means`` (``x,y; x,y; ...``) and either
    ``stds`` (one isotropic std per component) or ``covs`` (matrices
    ``a,b;c,d | ...``). Both take ``n_per_class`` and ``seed``.
    """
    entries = parse_key_values(text)
    known = {"kind", "n_per_class", "seed", "grid", "spacing", "std", "means", "stds", "covs"}
    vals = {}
    lines = {}
    for lineno, key, value in entries:
        if key not in known:
            raise BadSpecError(f"unknown key {key!r}", lineno)
        if key in vals:
            raise BadSpecError(f"duplicate key {key!r}", lineno)
        vals[key] = value
        lines[key] = lineno

    def num(key, cast, default):
        if key not in vals:
            return default
        try:
            out = cast(vals[key])
        except ValueError:
            raise BadSpecError(f"{key} = {vals[key]!r} is not a valid {cast.__name__}", lines[key]) from None
        return out

    kind = vals.get("kind")
    if kind is None:
        raise BadSpecError("missing required key 'kind'")
    n = num("n_per_class", int, 50)
    seed = num("seed", int, 0)
    if n < 1:
        raise BadSpecError("n_per_class must be positive", lines.get("n_per_class"))
    if kind == "checkerboard":
        grid = num("grid", int, 4)
        if grid < 1:
            raise BadSpecError("grid must be positive", lines.get("grid"))
        return checkerboard(n, grid, num("spacing", float, 1.0), num("std", float, 0.1), seed, id=id)
    if kind == "mixture":
        if "means" not in vals:
            raise BadSpecError("mixture needs 'means'")
        means = [_floats(m, lines["means"]) for m in vals["means"].split(";")]
        if "covs" in vals:
            covs = _matrices(vals["covs"], lines["covs"])
        else:
            stds = _floats(vals["stds"].replace(";", ","), lines["stds"]) if "stds" in vals else [num("std", float, 0.1)]
            if len(stds) == 1:
                stds = stds * len(means)
            if len(stds) != len(means):
                raise BadSpecError(f"{len(stds)} stds for {len(means)} means", lines.get("stds"))
            covs = [s**2 * np.eye(len(means[0])) for s in stds]
        try:
            return gaussian_mixture(n, means, covs, seed, id=id)
        except ValidationError as exc:
            raise BadSpecError(str(exc), lines.get("covs", lines["means"])) from exc
    raise BadSpecError(f"unknown kind {kind!r}", lines["kind"])


# ---------------------------------------------------------------------------
# helpers


def _run_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for key in ("solver", "epsilon", "max_iters", "tolerance", "label_method", "class_cap", "seed", "batch_size"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, str(value))
    return cfg


def _zscore(datasets):
    X = np.concatenate([ds.features for ds in datasets])
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return [replace(ds, features=(ds.features - mean) / std) for ds in datasets]


def _load_all(paths, normalize):
    datasets = [load_dataset(p) for p in paths]
    ids = [ds.id for ds in datasets]
    for i, ds in enumerate(datasets):
        if ids.count(ds.id) > 1:
            datasets[i] = ds.with_id(f"{ds.id}#{i}")
    if normalize == "zscore":
        datasets = _zscore(datasets)
    return datasets


def _emit_dataset(ds, args):
    if getattr(args, "harden", False):
        ds = harden(ds)
    save_dataset(ds, args.out)
    if getattr(args, "svg", None):
        write_svg(ds, args.svg)


def _print_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def _maps(Q, sources, run):
    cfg = run.otdd_config()
    if run.batch_size:
        return [batched_barycentric_map(Q, P, run.batch_size, run.seed, cfg) for P in sources]
    return [barycentric_map(Q, P, cfg) for P in sources]


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args):
    try:
        text = Path(args.spec).read_text()
    except OSError as exc:
        raise DatasetFormatError(f"{args.spec}: {exc.strerror or exc}") from exc
    ds = dataset_from_spec(text, id=Path(args.out).stem)
    _emit_dataset(ds, args)


def cmd_otdd(args):
    run = _run_config(args)
    A, B = _load_all([args.a, args.b], args.normalize)
    res = otdd(A, B, run.otdd_config())
    _print_json({"distance_squared": res.distance_squared, "solver": run.solver, "epsilon": res.epsilon})


def cmd_map(args):
    run = _run_config(args)
    if args.batched is not None:
        run.set("batch_size", str(args.batched))
    Q, P = _load_all([args.source, args.target], args.normalize)
    (mp,) = _maps(Q, [P], run)
    _emit_dataset(mp.pushforward(), args)


def _parse_weights(text, m):
    try:
        a = [float(v) for v in text.split(",")]
    except ValueError:
        raise BadWeightsError(f"weights must be comma-separated numbers, got {text!r}") from None
    if len(a) != m:
        raise BadWeightsError(f"{len(a)} weights for {m} sources")
    return SimplexWeights(a)


def cmd_interpolate(args):
    run = _run_config(args)
    Q, *sources = _load_all([args.target, *args.sources], args.normalize)
    if args.mccann:
        if len(sources) != 1:
            raise ValidationError("--mccann takes exactly one source")
        if args.t is None:
            raise ValidationError("--mccann needs --t")
        (mp,) = _maps(Q, sources, run)
        ds = mccann_dataset(Q, mp, args.t)
    else:
        if args.weights is None:
            raise BadWeightsError("give --weights or --mccann --t")
        a = _parse_weights(args.weights, len(sources))
        ds = combine(_maps(Q, sources, run), a)
    _emit_dataset(ds, args)


def cmd_project(args):
    run = _run_config(args)
    Q, *sources = _load_all([args.target, *args.sources], args.normalize)
    cfg = run.otdd_config()
    prob = build_projection_problem(Q, sources, cfg, batch_size=run.batch_size, seed=run.seed)
    sol = solve_projection_weights(prob)
    _print_json(
        {
            "a_hat": sol.a_hat.a.tolist(),
            "objective": sol.objective,
            "per_dataset_distances": prob.d.tolist(),
            "pairwise": prob.pairwise.tolist(),
            "sources": [P.id for P in sources],
            "kkt_residual": sol.kkt_residual,
        },
        args.json_out,
    )
    if args.out:
        ds = combine(list(prob.maps), sol.a_hat, id=f"projection({Q.id})")
        _emit_dataset(ds, args)


def cmd_grid(args):
    run = _run_config(args)
    resolution = args.resolution if args.resolution is not None else run.grid_resolution
    Q, *sources = _load_all([args.target, *args.sources], args.normalize)
    prob = build_projection_problem(Q, sources, run.otdd_config(), batch_size=run.batch_size, seed=run.seed)
    m = len(sources)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"a{i + 1}" for i in range(m)] + ["surrogate"])
        for a in simplex_grid(m, resolution):
            w.writerow([repr(float(v)) for v in a.a] + [repr(surrogate(a, prob))])


def cmd_pseudolabel(args):
    X = load_features(args.unlabeled)
    (few,) = _load_all([args.fewshot], None)
    ds = knn_pseudolabel(X, few, args.k, id=Path(args.out).stem)
    _emit_dataset(ds, args)


# ---------------------------------------------------------------------------
# parser


def _solver_options(p):
    g = p.add_argument_group("solver")
    g.add_argument("--config", help="key = value file with run settings")
    g.add_argument("--solver", choices=("exact", "sinkhorn"))
    g.add_argument("--epsilon", type=float, help="absolute entropic regularization")
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--tolerance", type=float)
    g.add_argument("--label-method", dest="label_method", choices=("exact", "gaussian"))
    g.add_argument("--class-cap", dest="class_cap", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--normalize", choices=("none", "zscore"), default="none",
                   help="z-score features with statistics pooled over all inputs")


def _output_options(p, required=True):
    p.add_argument("-o", "--out", required=required, help="output dataset (.csv or binary)")
    p.add_argument("--svg", help="also write a 2-D scatter plot")
    p.add_argument("--harden", action="store_true", help="export argmax one-hot labels")


def build_parser():
    parser = argparse.ArgumentParser(prog="otgeodesic", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset from a spec file")
    p.add_argument("spec")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("otdd", help="OTDD between two datasets (JSON)")
    p.add_argument("a")
    p.add_argument("b")
    _solver_options(p)
    p.set_defaults(func=cmd_otdd)

    p = sub.add_parser("map", help="barycentric pushforward of SOURCE onto TARGET")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--batched", type=int, metavar="B", help="batch size for the batched projection")
    _solver_options(p)
    _output_options(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("interpolate", help="dataset on the generalized geodesic")
    p.add_argument("target")
    p.add_argument("sources", nargs="+")
    p.add_argument("--weights", help="comma-separated simplex weights, one per source")
    p.add_argument("--mccann", action="store_true", help="McCann interpolation toward one source")
    p.add_argument("--t", type=float, help="McCann time in [0, 1]")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    _solver_options(p)
    _output_options(p)
    p.set_defaults(func=cmd_interpolate)

    p = sub.add_parser("project", help="projection weights of TARGET onto the sources (JSON)")
    p.add_argument("target")
    p.add_argument("sources", nargs="+")
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--json-out", dest="json_out", help="also write the JSON report here")
    _solver_options(p)
    _output_options(p, required=False)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("grid", help="surrogate objective over a simplex grid (CSV)")
    p.add_argument("target")
    p.add_argument("sources", nargs="+")
    p.add_argument("--resolution", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("-o", "--out", required=True)
    _solver_options(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("pseudolabel", help="kNN labels for unlabeled points")
    p.add_argument("unlabeled")
    p.add_argument("fewshot")
    p.add_argument("-k", type=int, default=1)
    _output_options(p)
    p.set_defaults(func=cmd_pseudolabel)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"error: {type(exc).__name__.removesuffix('Error')}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
