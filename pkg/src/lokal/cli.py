"""Command-line interface.

    lokal run --data PATH | --synthetic fig1 --method NAME --kernels SPEC,...
              --repeats K --seed S [--train-frac F] [--c C] [--scale MODE]
              [--report out.json] [--csv out.csv] [--threads T] ...
    lokal bench-solver [--sizes 200,400] [--trials 3]

``--config file.json`` preloads any flag by its long name (dashes or
underscores); explicit flags override the file.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from lokal.harness import ExperimentConfig, emit_report, run_experiment, write_memory_curve
from lokal.lkl import METHODS


def _parse_label_map(text: str) -> tuple[tuple[float, int], ...]:
    pairs = []
    for item in text.split(","):
        raw, _, target = item.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(f"label map entry {item!r} is not RAW=TARGET")
        pairs.append((float(raw), int(target)))
    return tuple(pairs)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok)


def _add_run_parser(subparsers) -> None:
    p = subparsers.add_parser("run", help="run a benchmark experiment")
    p.add_argument("--config", help="JSON file of defaults; flags override")
    p.add_argument("--data", dest="data_path", help="libsvm-format dataset path")
    p.add_argument("--synthetic", choices=["fig1"], help="generate a synthetic dataset")
    p.add_argument("--synth-n", dest="synth_n_per_class", type=int)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--kernels", help="comma-separated specs, e.g. linear,poly:2,gauss:grid")
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--train-frac", dest="train_fraction", type=float)
    p.add_argument("--c", dest="c", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--svr-epsilon", dest="epsilon", type=float)
    p.add_argument("--svr-gamma", dest="svr_gamma", type=float)
    p.add_argument("--scale", choices=["none", "minmax", "zscore"])
    p.add_argument("--gamma-grid", dest="gamma_grid", type=_parse_floats)
    p.add_argument("--label-map", dest="label_map", type=_parse_label_map,
                   help='raw-to-{-1,+1} mapping, e.g. "2=-1,4=1"')
    p.add_argument("--clusters", dest="clmkl_clusters", type=int,
                   help="cluster count for clmkl (default 3)")
    p.add_argument("--tau", dest="clmkl_tau", type=float,
                   help="soft-assignment temperature for clmkl (default 1.0)")
    p.add_argument("--threads", type=int)
    p.add_argument("--report", help="JSON report output path")
    p.add_argument("--csv", help="CSV report output path")
    p.add_argument("--memory-curve", help="two-column (n, bytes) output path")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        for key, val in raw.items():
            values[key.replace("-", "_")] = val

    for key in (
        "data_path", "synthetic", "synth_n_per_class", "method", "repeats", "seed",
        "train_fraction", "c", "tol", "epsilon", "svr_gamma", "scale", "threads",
    ):
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    if args.kernels is not None:
        values["kernels"] = tuple(k for k in args.kernels.split(",") if k)
    if args.gamma_grid is not None:
        values["gamma_grid"] = args.gamma_grid
    if args.label_map is not None:
        values["label_map"] = args.label_map
    if getattr(args, "clmkl_clusters", None) is not None:
        values["clusters"] = args.clmkl_clusters
    if getattr(args, "clmkl_tau", None) is not None:
        values["tau"] = args.clmkl_tau

    if "kernels" in values and not isinstance(values["kernels"], tuple):
        values["kernels"] = tuple(values["kernels"])
    if "gamma_grid" in values and values["gamma_grid"]:
        values["gamma_grid"] = tuple(float(g) for g in values["gamma_grid"])
    if "label_map" in values and values["label_map"]:
        values["label_map"] = tuple(
            (float(a), int(b)) for a, b in values["label_map"]
        )
    if "method" not in values:
        raise SystemExit("error: --method is required")
    if "kernels" not in values:
        raise SystemExit("error: --kernels is required")

    from lokal.lkl import ClmklParams, LmklParams

    if isinstance(values.get("lmkl"), dict):
        values["lmkl"] = LmklParams(**values["lmkl"])
    clmkl_kwargs = values.pop("clmkl", None)
    clmkl_kwargs = dict(clmkl_kwargs) if isinstance(clmkl_kwargs, dict) else {}
    if "clusters" in values:
        clmkl_kwargs["clusters"] = int(values.pop("clusters"))
    if "tau" in values:
        clmkl_kwargs["tau"] = float(values.pop("tau"))
    if clmkl_kwargs:
        values["clmkl"] = ClmklParams(**clmkl_kwargs)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"error: {exc}") from exc


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    try:
        report = run_experiment(cfg)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    acc = report.aggregates["accuracy"]
    sup = report.aggregates["support_fraction"]
    wall = report.aggregates["wall_time_s"]
    print(
        f"{cfg.method}: accuracy {acc['mean']:.4f} ({acc['std']:.4f})  "
        f"support {sup['mean']:.4f} ({sup['std']:.4f})  "
        f"fit {wall['mean']:.3f}s over {report.repeats} runs  "
        f"[{report.solver_backend} solver]"
    )
    if args.report:
        emit_report(report, "json", args.report, memory_curve_path=args.memory_curve)
        print(f"wrote {args.report}")
    elif args.memory_curve:
        write_memory_curve(report, args.memory_curve)
    if args.csv:
        emit_report(report, "csv", args.csv)
        print(f"wrote {args.csv}")
    return 0


def _cmd_bench_solver(args: argparse.Namespace) -> int:
    """Time the compiled SMO core against the pure-numpy fallback."""
    from lokal import _smo_py

    try:
        from lokal import _smo
    except ImportError:
        _smo = None

    rng = np.random.default_rng(0)
    print(f"{'n':>6} {'backend':>9} {'solve_ms':>10} {'iters':>8}")
    for n in args.sizes:
        X = rng.normal(size=(n, 6))
        y = np.where(X @ np.array([1.0, -0.5, 0.25, 0.0, 2.0, -1.0]) > 0, 1.0, -1.0)
        K = np.ascontiguousarray(X @ X.T + np.exp(-0.5 * ((X[:, None] - X[None, :]) ** 2).sum(-1)))
        idx = np.arange(n, dtype=np.intp)
        p = np.full(n, -1.0)
        results = {}
        for name, core in (("compiled", _smo), ("python", _smo_py)):
            if core is None:
                continue
            best = None
            for _ in range(args.trials):
                t0 = time.perf_counter()
                out = core.solve(K, idx, y, p, 1.0, 1e-3, 100 * n + 100_000)
                dt = (time.perf_counter() - t0) * 1e3
                best = dt if best is None else min(best, dt)
            results[name] = out
            print(f"{n:>6} {name:>9} {best:>10.2f} {out[2]:>8}")
        if "compiled" in results and not np.array_equal(results["compiled"][0], results["python"][0]):
            print("WARNING: backend solutions differ", file=sys.stderr)
            return 1
    if _smo is None:
        print("compiled extension not built; benchmarked the fallback only", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="lokal", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(subparsers)
    b = subparsers.add_parser("bench-solver", help="compare solver backends")
    b.add_argument("--sizes", type=lambda s: [int(t) for t in s.split(",")], default=[200, 400, 800])
    b.add_argument("--trials", type=int, default=3)

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_bench_solver(args)


if __name__ == "__main__":
    sys.exit(main())
