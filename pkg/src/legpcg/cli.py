"""Command-line front end: solves, table sweeps, matvec timing, rank study.

Exit codes: 0 success, 1 usage/config error, 2 non-convergence,
3 numerical failure (zero ILU pivot, loss of positive definiteness).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time

import numpy as np

from .coefficients import constant_field, preset, zero_field, PRESETS
from .operator import ProblemSpec, SpectralCoeffs, apply_A, apply_B
from .oracle import offdiag_rank_experiment
from .pcg import (SolverConfig, pcg_solve, run_benchmark, make_problem,
                  benchmark_rhs, BENCHMARKS, IndefiniteOperatorError)
from .sparse import IluZeroPivotError
from .transforms import TransformPlan

_CONFIG_KEYS = {"example", "coefficients", "dim", "n", "t1", "t2", "epsilon",
                "kmax", "preconditioner", "seed", "output"}


class UsageError(Exception):
    pass


def _emit(rows, fmt, out_path):
    """Write a list of row dicts as csv/json/pretty text."""
    if fmt == "json":
        text = json.dumps(rows, indent=2, default=str) + "\n"
    elif fmt == "csv":
        cols = list(rows[0].keys()) if rows else []
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(_csv_cell(r[c]) for c in cols))
        text = "\n".join(lines) + "\n"
    else:  # pretty
        cols = list(rows[0].keys()) if rows else []
        widths = [max(len(str(c)), max((len(_csv_cell(r[c])) for r in rows),
                                       default=0)) for c in cols]
        lines = ["  ".join(str(c).ljust(w) for c, w in zip(cols, widths))]
        for r in rows:
            lines.append("  ".join(_csv_cell(r[c]).ljust(w)
                                   for c, w in zip(cols, widths)))
        text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return "/".join(str(x) for x in v)
    return str(v)


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    bad = set(cfg) - _CONFIG_KEYS
    if bad:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(bad))}")
    if ("example" in cfg) == ("coefficients" in cfg):
        raise UsageError(
            "config needs exactly one of the 'example' / 'coefficients' keys")
    if "example" in cfg and cfg["example"] not in PRESETS:
        raise UsageError(f"unknown preset {cfg['example']!r}")
    if "coefficients" in cfg:
        co = cfg["coefficients"]
        if not isinstance(co, dict) or "beta" not in co or "dim" not in cfg:
            raise UsageError("'coefficients' must be an object with a "
                             "'beta' constant, and 'dim' must be given")
    if "n" not in cfg:
        raise UsageError("config is missing the 'n' key")
    return cfg


def _config_problem(cfg):
    n = int(cfg["n"])
    if "example" in cfg:
        case = cfg["example"]
        return case, make_problem(case, n)
    co = cfg["coefficients"]
    dim = int(cfg["dim"])
    alpha = float(co.get("alpha", 0.0))
    spec = ProblemSpec(
        dim=dim, N=n, beta=constant_field(dim, float(co["beta"])),
        alpha=zero_field(dim) if alpha == 0 else constant_field(dim, alpha))
    return "constant", spec


def cmd_solve(args):
    cfg = _load_config(args.config)
    case, spec = _config_problem(cfg)
    n = int(cfg["n"])
    use_pre = cfg.get("preconditioner", "truncated") != "none"
    t1 = cfg.get("t1", 0)
    t1 = tuple(t1) if isinstance(t1, list) else t1
    default_eps = BENCHMARKS.get(case, {}).get("epsilon", 1e-12)
    solver = SolverConfig(
        epsilon=float(cfg.get("epsilon", default_eps)),
        k_max=int(cfg.get("kmax", 10_000)),
        preconditioner=(t1, int(cfg.get("t2", 0))) if use_pre else None)
    mode = "accelerated" if spec.dim == 1 and n >= 512 else "reference"
    plan = TransformPlan(n + 1, mode=mode)
    seed = cfg.get("seed", args.seed)
    _, rep = pcg_solve(spec, solver, plan, benchmark_rhs(spec, seed))
    print(f"example: {case}")
    print(f"iterations: {rep.iterations}")
    print(f"converged: {rep.converged}")
    print(f"relative residual: {rep.final_relative_residual:.3e}")
    print(f"setup seconds: {rep.setup_seconds:.3f}")
    print(f"mean seconds per iteration: {rep.iter_seconds_mean:.4f}")
    target = cfg.get("output", args.out)
    if target:
        with open(target, "w", newline="\n") as fh:
            json.dump({"example": case, "N": n,
                       "iterations": rep.iterations,
                       "converged": rep.converged,
                       "rel_residual": rep.final_relative_residual,
                       "setup_s": rep.setup_seconds,
                       "iter_mean_s": rep.iter_seconds_mean}, fh, indent=2)
            fh.write("\n")
    return 0 if rep.converged else 2


def _parse_t_pairs(text):
    # "6,2;4,2" or with per-axis diffusion "4/3,0;5/3,0"
    pairs = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise UsageError(f"bad t pair {chunk!r}")
        t1 = tuple(int(x) for x in parts[0].split("/")) \
            if "/" in parts[0] else int(parts[0])
        pairs.append((t1, int(parts[1])))
    return pairs


def cmd_table(args):
    if args.example not in BENCHMARKS:
        raise UsageError(f"unknown example {args.example!r}")
    n_list = _int_list(args.n) if args.n is not None else None
    if n_list is not None and not n_list:
        raise UsageError("empty N list")
    t_pairs = _parse_t_pairs(args.t) if args.t else None
    cfg = SolverConfig(epsilon=args.epsilon) if args.epsilon else None
    rows = run_benchmark(args.example, n_list, t_pairs, config=cfg,
                         seed=args.seed if args.random_rhs else None)
    _emit(rows, args.format, args.out)
    return 0 if all(r["converged"] for r in rows) else 2


def cmd_bench_matvec(args):
    if args.reps < 3:
        raise UsageError("repetitions must be at least 3")
    n_list = _int_list(args.n)
    if not n_list:
        raise UsageError("empty N list")
    p = preset(args.preset)
    if p["dim"] != args.dim:
        raise UsageError(
            f"preset {args.preset!r} is {p['dim']}-dimensional, not {args.dim}")
    rng = np.random.Generator(np.random.Philox(args.seed))
    rows = []
    for n in n_list:
        spec = ProblemSpec(dim=args.dim, N=n, beta=p["beta"],
                           alpha=p["alpha"], axis_betas=p["axis_betas"])
        plan = TransformPlan(n + 1, mode=args.transform)
        u = SpectralCoeffs(rng.standard_normal((n - 1,) * args.dim))
        for op_name, op in (("A", apply_A), ("B", apply_B)):
            op(spec, plan, u)  # warm caches before timing
            times = []
            for _ in range(args.reps):
                t0 = time.perf_counter()
                op(spec, plan, u)
                times.append(time.perf_counter() - t0)
            rows.append({"d": args.dim, "N": n, "op": op_name,
                         "time_s": statistics.median(times)})
    _emit(rows, args.format, args.out)
    return 0


def cmd_rank(args):
    p = preset(args.preset)
    if p["dim"] != 1:
        raise UsageError("rank study applies to 1-D coefficients only")
    n_list = _int_list(args.n)
    if not n_list:
        raise UsageError("empty N list")
    if any(n % 2 for n in n_list):
        raise UsageError("all N must be even for the half-split block")
    taus = [float(x) for x in args.tau.split(",") if x]
    table = offdiag_rank_experiment(p["beta"], args.which, n_list, taus)
    rows = [{"preset": args.preset, "which": args.which, "N": row["N"],
             **{f"rank_tau_{t:g}": r for t, r in row["ranks"].items()}}
            for row in table]
    _emit(rows, args.format, args.out)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(
        prog="legpcg",
        description="Spectral elliptic solver benchmarks (PCG with a "
                    "truncated-coefficient sparse preconditioner)")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker thread cap for numba kernels")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one PCG solve from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("table", help="iteration-count sweep for an example")
    s.add_argument("--example", required=True)
    s.add_argument("--n", default=None, help="comma-separated N values")
    s.add_argument("--t", default=None,
                   help="semicolon-separated t1,t2 pairs (per-axis t1 "
                        "written a/b/c)")
    s.add_argument("--epsilon", type=float, default=None,
                   help="stopping tolerance (default: the example's "
                        "calibrated value)")
    s.add_argument("--format", choices=("csv", "json", "pretty"),
                   default="csv")
    s.add_argument("--out", default=None)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--random-rhs", action="store_true")
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("bench-matvec", help="median matvec wall times")
    s.add_argument("--dim", type=int, required=True, choices=(1, 2, 3))
    s.add_argument("--n", required=True)
    s.add_argument("--preset", default="example1a")
    s.add_argument("--reps", type=int, default=5)
    s.add_argument("--transform", choices=("reference", "accelerated"),
                   default="accelerated")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--format", choices=("csv", "json", "pretty"),
                   default="csv")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_bench_matvec)

    s = sub.add_parser("rank", help="off-diagonal block numerical ranks")
    s.add_argument("--preset", required=True)
    s.add_argument("--which", choices=("A", "B"), required=True)
    s.add_argument("--n", required=True)
    s.add_argument("--tau", default="1e-6")
    s.add_argument("--format", choices=("csv", "json", "pretty"),
                   default="csv")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_rank)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    if args.threads is not None:
        try:
            import numba
            numba.set_num_threads(max(1, args.threads))
        except Exception:
            pass
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IluZeroPivotError, IndefiniteOperatorError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
