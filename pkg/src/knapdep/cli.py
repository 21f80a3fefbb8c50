"""Command-line entry point.

Subcommands: gen, validate, run, opt, bench, tune.  Machine output goes
to stdout or --out files; human-readable summaries go to stderr.  All
randomness is surfaced through --seed; nothing depends on time or
environment, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import bench, instances, oracle, threshold
from .core import (
    Instance,
    KnapsackSpec,
    SchemaError,
    dumps_instance,
    loads_instance,
    validate_instance,
)
from .engine import run as engine_run

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _read_instance(path: str) -> Instance:
    if path == "-":
        return loads_instance(sys.stdin.read())
    return loads_instance(Path(path).read_text())


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _usage_error(message: str) -> SystemExit:
    print(f"error: {message}", file=sys.stderr)
    return SystemExit(EXIT_USAGE)


def _gamma_config(raw: str) -> dict:
    if raw == "auto":
        return {"kind": "exponential", "gamma": "auto"}
    try:
        return {"kind": "exponential", "gamma": float(raw)}
    except ValueError:
        raise _usage_error(f"--gamma must be a number or 'auto', got {raw!r}")


def _knapsack_specs(args: argparse.Namespace) -> tuple[KnapsackSpec, ...]:
    duration_hi = max(args.dlo, int(round(args.dlo * args.alpha)))
    size_cap = args.eps if args.eps is not None else args.capacity
    spec = KnapsackSpec(
        capacity=args.capacity,
        theta=args.theta,
        duration_lo=args.dlo,
        duration_hi=duration_hi,
        size_cap=size_cap,
    )
    return tuple([spec] * args.k)


def _collect_paths(sources: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for src in sources:
        p = Path(src)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.json")))
        else:
            paths.append(p)
    return paths


def _load_suite(sources: Sequence[str]) -> list[tuple[str, Instance]]:
    suite = []
    for p in _collect_paths(sources):
        suite.append((p.name, loads_instance(p.read_text())))
    return suite


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = instances.GenSpec(
        family=args.family,
        n=args.n,
        horizon=args.t,
        knapsacks=_knapsack_specs(args),
        seed=args.seed,
        eligibility=args.eligibility,
    )
    generated = instances.generate(spec, levels=args.levels)
    if args.family == "staircase" and args.level is not None:
        if not 1 <= args.level <= len(generated):
            raise _usage_error(f"--level must be in [1, {len(generated)}]")
        generated = [generated[args.level - 1]]
    if len(generated) == 1:
        _emit(dumps_instance(generated[0]), args.out)
    else:
        if args.out is None:
            raise _usage_error(
                "staircase emits one instance per prefix; pass --out PREFIX "
                "or select one with --level"
            )
        for i, inst in enumerate(generated, start=1):
            path = Path(f"{args.out}_prefix{i}.json")
            path.write_text(dumps_instance(inst) + "\n")
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    inst = _read_instance(args.input)
    gamma = None
    if args.gamma is not None:
        if args.gamma == "auto":
            gamma = [
                threshold.default_gamma(ks.theta, ks.alpha) for ks in inst.knapsacks
            ]
        else:
            gamma = [float(args.gamma)] * inst.num_knapsacks
    report = validate_instance(inst, strict=args.strict, gamma=gamma)
    _emit(json.dumps(report.to_dict(), indent=2), args.out)
    for msg in report.errors:
        print(f"error: {msg}", file=sys.stderr)
    for msg in report.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAILURE


def _cmd_run(args: argparse.Namespace) -> int:
    inst = _read_instance(args.input)
    fns = threshold.for_instance(inst, _gamma_config(args.gamma))
    result = engine_run(inst, fns)
    _emit(json.dumps(result.to_dict(), indent=2), args.out)
    print(f"profit {result.profit!r} over {inst.num_items} items", file=sys.stderr)
    return EXIT_OK


def _cmd_opt(args: argparse.Namespace) -> int:
    inst = _read_instance(args.input)
    if args.method == "bruteforce":
        sol = oracle.solve_bruteforce(inst)
    else:
        sol = oracle.solve_exact(inst, node_budget=args.node_budget)
    _emit(json.dumps(sol.to_dict(), indent=2), args.out)
    print(
        f"objective {sol.objective!r} ({sol.proof}, {sol.nodes} nodes)",
        file=sys.stderr,
    )
    return EXIT_OK


def _bench_config(args: argparse.Namespace, file_cfg: dict) -> bench.BenchConfig:
    threshold_cfg = file_cfg.get("threshold", _gamma_config(args.gamma))
    if args.gamma != "auto":
        threshold_cfg = _gamma_config(args.gamma)
    return bench.BenchConfig(
        threshold=threshold_cfg,
        exact_cutoff=(
            args.exact_cutoff
            if args.exact_cutoff is not None
            else file_cfg.get("exact_cutoff", 18)
        ),
        crosscheck_cutoff=(
            args.crosscheck_cutoff
            if args.crosscheck_cutoff is not None
            else file_cfg.get("crosscheck_cutoff", 10)
        ),
        node_budget=(
            args.node_budget
            if args.node_budget is not None
            else file_cfg.get("node_budget", 5_000_000)
        ),
        jobs=args.jobs if args.jobs is not None else file_cfg.get("jobs", 1),
    )


def _suite_sources(args: argparse.Namespace, file_cfg: dict) -> list[str]:
    sources = list(args.input or [])
    sources.extend(file_cfg.get("instances", []))
    if not sources:
        raise _usage_error("no instances: pass --input files/dirs or --config")
    return sources


def _cmd_bench(args: argparse.Namespace) -> int:
    file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    suite = _load_suite(_suite_sources(args, file_cfg))
    report = bench.bench_suite(suite, _bench_config(args, file_cfg))
    if args.out:
        Path(f"{args.out}.csv").write_text(report.to_csv())
        Path(f"{args.out}.json").write_text(report.to_json() + "\n")
        print(f"wrote {args.out}.csv and {args.out}.json", file=sys.stderr)
    else:
        _emit(report.to_json(), None)
    cr = "inf" if report.cr_infinite else report.cr
    print(f"suite CR {cr} over {len(report.rows)} instances", file=sys.stderr)
    return EXIT_OK


def _cmd_tune(args: argparse.Namespace) -> int:
    file_cfg = json.loads(Path(args.config).read_text()) if args.config else {}
    tuner_cfg = file_cfg.get("tuner", {})
    suite = _load_suite(_suite_sources(args, file_cfg))
    spec = bench.TuneSpec(
        training=tuple(inst for _, inst in suite),
        delta=args.delta if args.delta is not None else tuner_cfg.get("delta", 0.5),
        grid_points=(
            args.grid_points
            if args.grid_points is not None
            else tuner_cfg.get("grid_points", 11)
        ),
    )
    result = bench.tune_gamma(spec)
    if args.out:
        Path(f"{args.out}.json").write_text(
            json.dumps(result.to_dict(), indent=2) + "\n"
        )
        Path(f"{args.out}.curve.csv").write_text(result.curve_csv())
        print(f"wrote {args.out}.json and {args.out}.curve.csv", file=sys.stderr)
    else:
        _emit(json.dumps(result.to_dict(), indent=2), None)
    print(
        f"tuned multiplier {result.multiplier!r} "
        f"(gammas {[round(g, 6) for g in result.gammas]})",
        file=sys.stderr,
    )
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knapdep",
        description=(
            "Online knapsacks with departing items: generate instances, run "
            "the threshold engine, solve offline optima, and benchmark "
            "competitive ratios."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate an instance (JSON to stdout/--out)")
    gen.add_argument("--family", choices=instances.FAMILIES, default="uniform")
    gen.add_argument("--n", type=int, default=20, help="item count")
    gen.add_argument("--k", type=int, default=1, help="knapsack count")
    gen.add_argument("--t", type=int, default=50, help="horizon (slots)")
    gen.add_argument("--capacity", type=float, default=10.0)
    gen.add_argument("--theta", type=float, default=4.0, help="max value density")
    gen.add_argument("--alpha", type=float, default=2.0, help="duration ratio")
    gen.add_argument("--dlo", type=int, default=1, help="min duration (slots)")
    gen.add_argument("--eps", type=float, default=None, help="size cap (default: capacity)")
    gen.add_argument("--eligibility", type=float, default=1.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--levels", type=int, default=4, help="staircase level count")
    gen.add_argument("--level", type=int, default=None, help="emit one staircase prefix")
    gen.add_argument("--out", default=None)

    val = sub.add_parser("validate", help="check structure and declared bounds")
    val.add_argument("--input", default="-")
    val.add_argument("--strict", action="store_true")
    val.add_argument("--gamma", default=None, help="check the size precondition for this gamma")
    val.add_argument("--out", default=None)

    runp = sub.add_parser("run", help="run the online engine")
    runp.add_argument("--input", default="-")
    runp.add_argument("--gamma", default="auto")
    runp.add_argument("--out", default=None)

    opt = sub.add_parser("opt", help="solve the offline optimum")
    opt.add_argument("--input", default="-")
    opt.add_argument("--method", choices=("exact", "bruteforce"), default="exact")
    opt.add_argument("--node-budget", type=int, default=5_000_000)
    opt.add_argument("--out", default=None)

    ben = sub.add_parser("bench", help="engine vs oracle over an instance suite")
    ben.add_argument("--input", nargs="*", default=None, help="instance files or dirs")
    ben.add_argument("--config", default=None, help="experiment config JSON")
    ben.add_argument("--gamma", default="auto")
    ben.add_argument("--exact-cutoff", type=int, default=None)
    ben.add_argument("--crosscheck-cutoff", type=int, default=None)
    ben.add_argument("--node-budget", type=int, default=None)
    ben.add_argument("--jobs", type=int, default=None)
    ben.add_argument("--out", default=None, help="write OUT.csv and OUT.json")

    tun = sub.add_parser("tune", help="grid-tune gamma inside the safety band")
    tun.add_argument("--input", nargs="*", default=None, help="training instances")
    tun.add_argument("--config", default=None)
    tun.add_argument("--delta", type=float, default=None, help="band half-width")
    tun.add_argument("--grid-points", type=int, default=None)
    tun.add_argument("--out", default=None, help="write OUT.json and OUT.curve.csv")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen": _cmd_gen,
        "validate": _cmd_validate,
        "run": _cmd_run,
        "opt": _cmd_opt,
        "bench": _cmd_bench,
        "tune": _cmd_tune,
    }
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except (OSError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
