"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 certification failure.
Records go to stdout as JSON lines; bench aggregates can also go to CSV.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from .buckets import neighborhood
from .evaluation import BRUTE_FORCE_MAX_N, average_value, brute_force
from .fourier import theorem2_certificate
from .generators import FAMILIES, GenSpec
from .model import GuardError, Instance, InstanceError, load_instance, serialize_instance
from .solvers import derive_seed, local_search, local_search_with_restarts

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CERT = 0, 1, 2, 3
AUTO_OPT_MAX_N = 8
RATIO_EPS = 1e-9
CSV_COLUMNS = ["run_index", "seed", "value", "avg", "opt", "advantage_ratio",
               "moves_with_gain", "fresh_count"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    raw = os.environ.get("ORDERCSP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ORDERCSP_SEED must be an integer, got {raw!r}") from None


def _seed(text: str) -> int:
    seed = int(text)
    if not 0 <= seed < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return seed


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _advantage(value: float, avg: float, opt: float | None) -> float | None:
    if opt is None or opt - avg <= RATIO_EPS:
        return None
    return (value - avg) / (opt - avg)


def _maybe_opt(instance: Instance, force: bool) -> float | None:
    if instance.n <= AUTO_OPT_MAX_N or force:
        return brute_force(instance).opt
    return None


def _instance_from_args(args) -> tuple[Instance, str]:
    if getattr(args, "instance", None):
        return load_instance(args.instance), args.instance
    if getattr(args, "family", None):
        spec = GenSpec(args.family, args.n, args.b, args.gen_seed, args.k)
        return spec.build(), f"gen:{spec.family}:n={spec.n}:B={spec.B}:k={spec.k}:seed={spec.seed}"
    raise UsageError("give an instance path or --family with generator flags")


def cmd_gen(args) -> int:
    spec = GenSpec(args.family, args.n, args.b, args.seed, args.k)
    instance = spec.build()
    text = serialize_instance(instance)
    summary = {"family": spec.family, "n": instance.n, "B": instance.B, "k": instance.k,
               "constraints": len(instance.constraints), "seed": spec.seed}
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        summary["path"] = args.out
        _emit(summary)
    else:
        sys.stdout.write(text)
        print(json.dumps(summary), file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    started = time.perf_counter()
    ordering, summary = local_search_with_restarts(instance, args.seed, args.restarts, args.iterations)
    elapsed = time.perf_counter() - started
    if args.trace:
        best_seed = summary.sub_seeds[summary.best_index]
        _, trace = local_search(instance, best_seed, args.iterations)
        for move in trace.to_records():
            _emit({"type": "move", "run_seed": best_seed, **move})
    avg = average_value(instance)
    opt = _maybe_opt(instance, args.opt)
    record = {
        "type": "run",
        "instance": args.instance,
        "seed": args.seed,
        "algorithm": "local_search" if args.restarts == 1 else "local_search_restarts",
        "restarts": args.restarts,
        "iterations": instance.n if args.iterations is None else args.iterations,
        "value": summary.best_value,
        "avg": avg,
        "opt": opt,
        "advantage_ratio": _advantage(summary.best_value, avg, opt),
        "ordering": list(ordering.sequence),
    }
    if not args.no_timestamp:
        record["wall_time"] = elapsed
    _emit(record)
    return EXIT_OK


def cmd_brute(args) -> int:
    instance = load_instance(args.instance)
    _emit(brute_force(instance).to_dict())
    return EXIT_OK


def cmd_certify(args) -> int:
    instance = load_instance(args.instance)
    if args.vertex is not None:
        if not 0 <= args.vertex < instance.n:
            raise InstanceError(f"vertex {args.vertex} out of range for n={instance.n}")
        vertices = [args.vertex]
    else:
        vertices = list(range(instance.n))
    passed = failed = skipped = 0
    for u in vertices:
        try:
            cert = theorem2_certificate(neighborhood(instance, u))
        except GuardError as exc:
            if args.vertex is not None:
                raise
            skipped += 1
            _emit({"vertex": u, "skipped": str(exc)})
            continue
        _emit(cert.to_dict())
        if cert.passed:
            passed += 1
        else:
            failed += 1
    _emit({"summary": True, "certified": passed + failed, "passed": passed,
           "failed": failed, "skipped": skipped})
    return EXIT_CERT if failed else EXIT_OK


def _bench_run(job):
    instance, seed, iterations = job
    ordering, trace = local_search(instance, seed, iterations)
    return trace.final_value, trace.moves_with_gain, sorted(trace.fresh_vertices)


def cmd_bench(args) -> int:
    instance, label = _instance_from_args(args)
    started = time.perf_counter()
    seeds = [derive_seed(args.seed, i) for i in range(args.runs)]
    jobs = [(instance, s, args.iterations) for s in seeds]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            results = list(pool.map(_bench_run, jobs, chunksize=max(1, args.runs // (4 * args.workers))))
    else:
        results = [_bench_run(job) for job in jobs]

    avg = average_value(instance)
    opt = _maybe_opt(instance, args.opt)
    values = [r[0] for r in results]
    fresh_counts = [0] * instance.n
    rows = []
    ratios = []
    for i, (val, gained, fresh) in enumerate(results):
        for v in fresh:
            fresh_counts[v] += 1
        ratio = _advantage(val, avg, opt)
        if ratio is not None:
            ratios.append(ratio)
        rows.append([i, seeds[i], val, avg, "" if opt is None else opt,
                     "" if ratio is None else ratio, gained, len(fresh)])
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            writer.writerows(rows)

    mean = math.fsum(values) / len(values)
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1) if len(values) > 1 else 0.0
    summary = {
        "instance": label,
        "seed": args.seed,
        "runs": args.runs,
        "iterations": instance.n if args.iterations is None else args.iterations,
        "mean_value": mean,
        "std_value": math.sqrt(var),
        "avg": avg,
        "opt": opt,
        "mean_advantage_ratio": math.fsum(ratios) / len(ratios) if ratios else None,
        "freshness": {str(v): fresh_counts[v] / args.runs for v in range(instance.n)},
    }
    if not args.no_timestamp:
        summary["wall_time"] = time.perf_counter() - started
    _emit(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ordercsp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    seed_help = "64-bit seed (default: $ORDERCSP_SEED or 0)"

    def gen_flags(p, seed_flag):
        p.add_argument("--family", choices=FAMILIES)
        p.add_argument("--n", type=int, default=8)
        p.add_argument("--b", type=int, default=2, help="occurrence bound B")
        p.add_argument("--k", type=int, default=2, help="arity for random-table")
        p.add_argument(seed_flag, type=_seed, default=None, help=seed_help)

    p = sub.add_parser("gen", help="generate a seeded instance file")
    gen_flags(p, "--seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run randomized local search")
    p.add_argument("instance")
    p.add_argument("--seed", type=_seed, default=None, help=seed_help)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--iterations", type=int, default=None, help="moves per run (default: n)")
    p.add_argument("--trace", action="store_true", help="emit per-move records of the best run")
    p.add_argument("--opt", action="store_true", help=f"brute-force Opt even for n > {AUTO_OPT_MAX_N}")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("brute", help=f"exact Opt/Wst/Avg (n <= {BRUTE_FORCE_MAX_N})")
    p.add_argument("instance")
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("certify", help="exact Fourier improvement certificates per vertex")
    p.add_argument("instance")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--vertex", type=int)
    group.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("bench", help="many seeded runs with aggregate statistics")
    p.add_argument("instance", nargs="?")
    gen_flags(p, "--gen-seed")
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=_seed, default=None, help=seed_help)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--csv", help="per-run CSV output path")
    p.add_argument("--opt", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if getattr(args, "seed", "x") is None:
            args.seed = _default_seed()
        if getattr(args, "gen_seed", "x") is None:
            args.gen_seed = 0
        for flag in ("restarts", "runs", "workers"):
            if getattr(args, flag, 1) < 1:
                raise UsageError(f"--{flag} must be >= 1")
        if getattr(args, "iterations", None) is not None and args.iterations < 0:
            raise UsageError("--iterations must be >= 0")
        if args.command == "gen" and args.family is None:
            raise UsageError("gen requires --family")
        return args.func(args)
    except UsageError as exc:
        print(f"ordercsp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, GuardError, ValueError, OSError) as exc:
        print(f"ordercsp: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
