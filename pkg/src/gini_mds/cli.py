"""Batch command-line frontend.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
Every command writes a ``manifest.json`` recording its arguments, resolved
settings, seed, version and per-phase timings; ``gini-mds replay`` reruns one.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import contextmanager

import numpy as np
from scipy.spatial.distance import squareform

from . import __version__
from .data import (
    STANDARDIZATION_MODES,
    CONTAMINATION_MODES,
    ContaminationSpec,
    SimSpec,
    atomic_write,
    contaminate,
    dataset_to_csv,
    gen_heavy_tailed,
    load_csv,
    standardize,
)
from .embed import LOSSES, StressConfig, classical_mds, minimize_stress
from .errors import (
    DataParseError,
    DegenerateInputError,
    InvalidConfigError,
    InvalidInputError,
    InvalidParameterError,
    NumericError,
)
from .evaluate import K_NN, K_TRUST, evaluate_embedding
from .metrics import pairwise_matrix, resolve_threads
from .plot import scatter_svg
from .tune import alternating_tune, default_grid, parse_grid, tune_nu

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
DISTANCE_REPORT_LIMIT = 50
METRICS = ("trustworthiness", "nn_agreement", "silhouette", "pearson", "spearman")


class _Timer:
    def __init__(self):
        self.phases = {}

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = round(time.perf_counter() - t0, 6)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(value):
    """Make numpy scalars and non-finite floats JSON friendly."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _coords_csv(coords) -> str:
    p = coords.shape[1]
    lines = [",".join(f"c{j + 1}" for j in range(p))]
    lines += [",".join(format(float(v), ".17g") for v in row) for row in coords]
    return "\n".join(lines) + "\n"


def _out_dir(args):
    os.makedirs(args.out_dir, exist_ok=True)
    return args.out_dir


def _load(args, path=None, label_column="unset"):
    label = args.label_column if label_column == "unset" else label_column
    ds = load_csv(path or args.input, has_header=not args.no_header, label_column=label)
    return standardize(ds, args.standardize) if args.standardize != "none" else ds


def _stress_config(args, loss):
    delta = args.huber_delta if args.huber_delta == "auto" else float(args.huber_delta)
    return StressConfig(loss=loss, huber_delta=delta, max_iters=args.max_iters,
                        rel_tol=args.rel_tol, seed=args.seed)


def _manifest(args, argv, timer, results, resolved):
    return {
        "command": args.command,
        "argv": list(argv),
        "inputs": [p for p in (getattr(args, "input", None), getattr(args, "coords", None)) if p],
        "config": _clean(resolved),
        "seed": args.seed,
        "version": __version__,
        "results": _clean(results),
        "timings": timer.phases,
    }


def _write_manifest(args, argv, timer, results, resolved):
    atomic_write(os.path.join(args.out_dir, "manifest.json"),
                 _dumps(_manifest(args, argv, timer, results, resolved)))


def _scatter(out, coords, labels, title):
    if coords.shape[1] <= 2:
        atomic_write(os.path.join(out, "scatter.svg"), scatter_svg(coords, labels, title))


def cmd_embed(args, argv):
    timer = _Timer()
    out = _out_dir(args)
    if args.metric == "gini" and args.nu is None and not args.tune:
        raise InvalidConfigError("--metric gini needs --nu or --tune")
    with timer.phase("load"):
        ds = _load(args)
    nu = args.nu
    tune_info = None
    with timer.phase("distances"):
        if args.metric == "gini" and args.tune:
            report = tune_nu(ds.X, args.dims, parse_grid(args.grid), args.folds, "classical",
                             args.seed, threads=args.threads)
            nu = report.nu_star
            tune_info = report.to_dict()
        D = pairwise_matrix(ds.X, nu, metric=args.metric, threads=args.threads)
    with timer.phase("embed"):
        if args.loss == "classical":
            emb = classical_mds(D, args.dims)
        else:
            emb = minimize_stress(D, args.dims, _stress_config(args, args.loss))
    with timer.phase("write"):
        atomic_write(os.path.join(out, "coords.csv"), _coords_csv(emb.coords))
        _scatter(out, emb.coords, ds.labels, f"{args.metric} MDS")
    cond = squareform(D, checks=False)
    results = {
        "n": ds.n,
        "d": ds.d,
        "stress": emb.stress,
        "loss": args.loss,
        "converged": emb.converged,
        "iterations": emb.n_iter,
        "eigenvalues": emb.eigenvalues,
        "clamped_mass": emb.clamped_mass,
        "huber_delta": emb.huber_delta,
        "nu": nu,
        "distance_summary": {"min": cond.min(), "max": cond.max(), "mean": cond.mean()},
        "tune": tune_info,
    }
    if ds.n <= DISTANCE_REPORT_LIMIT:
        results["distances"] = cond
    resolved = {"metric": args.metric, "nu": nu, "dims": args.dims, "loss": args.loss,
                "standardize": args.standardize, "max_iters": args.max_iters,
                "rel_tol": args.rel_tol, "huber_delta": args.huber_delta}
    _write_manifest(args, argv, timer, results, resolved)
    print(f"stress={emb.stress:.6g} coords={os.path.join(out, 'coords.csv')}")
    return EXIT_OK


def cmd_tune(args, argv):
    timer = _Timer()
    out = _out_dir(args)
    folds = 1 if args.no_cv else args.folds
    if folds < 2 and not args.no_cv:
        raise InvalidConfigError("--folds must be >= 2 (or pass --no-cv)")
    grid = parse_grid(args.grid)
    with timer.phase("load"):
        ds = _load(args)
    config = None if args.loss == "classical" else _stress_config(args, args.loss)
    with timer.phase("tune"):
        report = tune_nu(ds.X, args.dims, grid, folds, args.loss, args.seed, config, threads=args.threads)
    with timer.phase("write"):
        atomic_write(os.path.join(out, "tune_report.json"), _dumps(_clean(report.to_dict())))
        coords = report.best_embedding.coords
        atomic_write(os.path.join(out, "coords.csv"), _coords_csv(coords))
        _scatter(out, coords, ds.labels, f"Gini MDS nu*={report.nu_star:.4g}")
    resolved = {"grid": list(grid.values), "folds": folds, "dims": args.dims, "loss": args.loss,
                "standardize": args.standardize}
    _write_manifest(args, argv, timer, {"nu_star": report.nu_star,
                                        "stress": report.best_embedding.stress}, resolved)
    print(f"nu*={report.nu_star:.6g} stress={report.best_embedding.stress:.6g}")
    return EXIT_OK


def cmd_eval(args, argv):
    timer = _Timer()
    out = _out_dir(args)
    with timer.phase("load"):
        ds = _load(args, label_column=args.labels)
        coords = load_csv(args.coords, has_header=True).X
    if coords.shape[0] != ds.n:
        raise InvalidInputError(f"row mismatch: {ds.n} input rows vs {coords.shape[0]} coordinate rows")
    with timer.phase("eval"):
        report = evaluate_embedding(ds.X, coords, ds.labels, args.k_trust, args.k_nn)
    atomic_write(os.path.join(out, "eval_report.json"), _dumps(_clean(report.to_dict())))
    resolved = {"labels": args.labels, "k_trust": args.k_trust, "k_nn": args.k_nn,
                "standardize": args.standardize}
    _write_manifest(args, argv, timer, report.to_dict(), resolved)
    print(" ".join(f"{k}={v}" for k, v in report.to_dict().items()))
    return EXIT_OK


def _mean_se(values):
    v = np.asarray([x for x in values if x is not None], dtype=np.float64)
    if v.size == 0:
        return None, None
    se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else None
    return float(v.mean()), se


def run_simulation(reps, seed, dims=2, n=500, T=3, grid=None, k_trust=K_TRUST, k_nn=K_NN,
                   threads=None, progress=None):
    """Per-replication metrics of the heavy-tailed experiment, as a list of dicts."""
    grid = grid or default_grid()
    rows = []
    for r in range(reps):
        ds = standardize(gen_heavy_tailed(SimSpec(n=n, seed=seed, replication=r)), "median_unit")
        emb, nu = alternating_tune(ds.X, dims, T, grid, seed=seed, threads=threads)
        rep = evaluate_embedding(ds.X, emb.coords, ds.labels, k_trust, k_nn)
        row = {"rep": r, "nu_star": nu, "sammon_stress": emb.stress}
        row.update({m: getattr(rep, m) for m in METRICS})
        rows.append(row)
        if progress:
            progress(row)
    return rows


def aggregate(rows):
    agg = {}
    for m in ("nu_star",) + METRICS:
        mean, se = _mean_se([r[m] for r in rows])
        agg[m] = {"mean": mean, "se": se}
    agg["reps"] = len(rows)
    return agg


def cmd_simulate(args, argv):
    timer = _Timer()
    out = _out_dir(args)
    if args.reps < 1:
        raise InvalidConfigError("--reps must be >= 1")
    grid = parse_grid(args.grid)
    with timer.phase("simulate"):
        rows = run_simulation(args.reps, args.seed, args.dims, args.n, args.T, grid,
                              args.k_trust, args.k_nn, args.threads)
    cols = ["rep", "nu_star", "sammon_stress"] + list(METRICS)
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r[c]) if isinstance(r[c], int) else format(float(r[c]), ".17g")
                              for c in cols))
    atomic_write(os.path.join(out, "per_rep.csv"), "\n".join(lines) + "\n")
    agg = aggregate(rows)
    atomic_write(os.path.join(out, "aggregate.json"), _dumps(_clean(agg)))
    resolved = {"reps": args.reps, "dims": args.dims, "n": args.n, "T": args.T,
                "grid": list(grid.values)}
    _write_manifest(args, argv, timer, agg, resolved)
    print(f"pearson={agg['pearson']['mean']:.4f} spearman={agg['spearman']['mean']:.4f}")
    return EXIT_OK


def cmd_contaminate(args, argv):
    timer = _Timer()
    out = _out_dir(args)
    spec = ContaminationSpec(args.fraction, args.factor, args.seed, args.mode)
    with timer.phase("load"):
        ds = load_csv(args.input, has_header=not args.no_header, label_column=args.label_column)
    with timer.phase("contaminate"):
        dirty, rows = contaminate(ds, spec)
    atomic_write(os.path.join(out, "contaminated.csv"), dataset_to_csv(dirty))
    atomic_write(os.path.join(out, "indices.json"), _dumps({"indices": [int(i) for i in rows]}))
    resolved = {"fraction": args.fraction, "factor": args.factor, "mode": args.mode}
    _write_manifest(args, argv, timer, {"altered_rows": len(rows)}, resolved)
    print(f"altered {len(rows)} of {ds.n} rows")
    return EXIT_OK


def cmd_replay(args, argv):
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    replay_argv = list(manifest["argv"])
    if args.out_dir:
        replay_argv += ["--out-dir", args.out_dir]
    return main(replay_argv)


def _add_common(p, data=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (default: $GINI_MDS_THREADS or logical cores)")
    p.add_argument("--out-dir", default=".")
    if data:
        p.add_argument("--no-header", action="store_true")
        p.add_argument("--label-column", default=None, help="label column name or 0-based index")
        p.add_argument("--standardize", choices=STANDARDIZATION_MODES, default="none")


def _add_stress(p):
    p.add_argument("--huber-delta", default="auto")
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--rel-tol", type=float, default=1e-6)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gini-mds", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a CSV with classical or stress MDS")
    p.add_argument("input")
    p.add_argument("--metric", choices=("euclidean", "gini"), default="gini")
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--tune", action="store_true", help="pick nu by K-fold stress first")
    p.add_argument("--grid", default="1.1:5:30")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--loss", choices=("classical",) + LOSSES, default="classical")
    _add_stress(p)
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("tune", help="grid-search nu by mean K-fold Kruskal stress")
    p.add_argument("input")
    p.add_argument("--grid", default="1.1:5:30", help="lo:hi:count")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--no-cv", action="store_true", help="score on all rows as a single fold")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--loss", choices=("classical",) + LOSSES, default="classical")
    _add_stress(p)
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("eval", help="quality metrics of an embedding")
    p.add_argument("input")
    p.add_argument("coords")
    p.add_argument("--labels", default=None, help="label column of INPUT (name or index)")
    p.add_argument("--k-trust", type=int, default=K_TRUST)
    p.add_argument("--k-nn", type=int, default=K_NN)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="heavy-tailed replication experiment")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--T", type=int, default=3)
    p.add_argument("--grid", default="1.1:5:30")
    p.add_argument("--k-trust", type=int, default=K_TRUST)
    p.add_argument("--k-nn", type=int, default=K_NN)
    _add_common(p, data=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("contaminate", help="scale a random fraction of rows")
    p.add_argument("input")
    p.add_argument("--fraction", type=float, default=0.02)
    p.add_argument("--factor", type=float, default=10.0)
    p.add_argument("--mode", choices=CONTAMINATION_MODES, default=CONTAMINATION_MODES[0])
    _add_common(p)
    p.set_defaults(func=cmd_contaminate)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if getattr(args, "threads", None) is None and args.command != "replay":
        args.threads = resolve_threads(None)
    try:
        return args.func(args, argv)
    except (InvalidConfigError, InvalidParameterError) as exc:
        print(f"gini-mds: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataParseError, InvalidInputError, DegenerateInputError, OSError) as exc:
        print(f"gini-mds: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"gini-mds: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
