"""Benchmark harness: online engine vs offline optimum over suites.

Each instance contributes one row (online profit, offline optimum or a
bound, their ratio); the suite's empirical competitive ratio is the
maximum ratio over rows with a proven optimum.  A grid tuner searches the
threshold curvature inside a safety band around the analytic default, so
tuned parameters keep a worst-case anchor.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import oracle, threshold
from .core import Instance
from .engine import run

RATIO_TOL = 1e-9


@dataclass(frozen=True)
class BenchConfig:
    """Harness knobs; all defaults are overridable per run.

    Instances with at most ``exact_cutoff`` items get a proven optimum
    (branch-and-bound); at most ``crosscheck_cutoff`` items additionally
    get an exhaustive-enumeration cross-check; larger instances are scored
    against the cheap upper bound only and flagged.
    """

    threshold: Mapping = field(default_factory=lambda: {"kind": "exponential", "gamma": "auto"})
    exact_cutoff: int = 18
    crosscheck_cutoff: int = 10
    node_budget: Optional[int] = 5_000_000
    jobs: int = 1

    def to_dict(self) -> dict:
        return {
            "threshold": dict(self.threshold),
            "exact_cutoff": self.exact_cutoff,
            "crosscheck_cutoff": self.crosscheck_cutoff,
            "node_budget": self.node_budget,
            "jobs": self.jobs,
        }


@dataclass
class BenchRow:
    instance_id: str
    n_items: int
    alg: float
    opt: float
    opt_tag: str      # "exact" | "bound"
    ratio: float      # may be math.inf
    infinite: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "n_items": self.n_items,
            "alg": self.alg,
            "opt": self.opt,
            "opt_tag": self.opt_tag,
            "ratio": "inf" if self.infinite else self.ratio,
            "infinite": self.infinite,
            "error": self.error,
        }


@dataclass
class BenchReport:
    """Suite result: rows sorted by ratio descending, then instance id."""

    rows: list[BenchRow]
    cr: Optional[float]   # empirical competitive ratio over exact rows
    cr_infinite: bool
    mean_ratio: Optional[float]  # mean over finite exact rows
    config: dict

    def to_dict(self) -> dict:
        return {
            "empirical_cr": "inf" if self.cr_infinite else self.cr,
            "cr_infinite": self.cr_infinite,
            "mean_ratio": self.mean_ratio,
            "rows": [r.to_dict() for r in self.rows],
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["instance_id", "n_items", "alg", "opt", "opt_tag", "ratio", "infinite", "error"]
        )
        for r in self.rows:
            writer.writerow(
                [
                    r.instance_id,
                    r.n_items,
                    repr(r.alg),
                    repr(r.opt),
                    r.opt_tag,
                    "inf" if r.infinite else repr(r.ratio),
                    str(r.infinite).lower(),
                    r.error or "",
                ]
            )
        return out.getvalue()


def _shared_knapsack_echo(
    instances: Sequence[tuple[str, Instance]], cfg: "BenchConfig"
) -> Optional[list[dict]]:
    """Effective per-knapsack (gamma, theta, alpha, size cap) for the echo.

    Only well-defined when every instance shares the same knapsack specs;
    heterogeneous suites echo None and rely on per-instance sources.
    """
    if not instances:
        return None
    first = instances[0][1]
    if any(inst.knapsacks != first.knapsacks for _, inst in instances):
        return None
    try:
        fns = threshold.for_instance(first, dict(cfg.threshold))
    except (ValueError, KeyError):
        return None
    return [
        {
            "gamma": getattr(fn, "gamma", None),
            "theta": spec.theta,
            "alpha": spec.alpha,
            "size_cap": spec.size_cap,
        }
        for fn, spec in zip(fns, first.knapsacks)
    ]


def _ratio(alg: float, opt: float) -> tuple[float, bool]:
    """OPT/ALG with the 0/0 := 1 convention; ALG=0 < OPT flags infinity."""
    if alg == 0.0 and opt == 0.0:
        return 1.0, False
    if alg == 0.0:
        return math.inf, True
    return opt / alg, False


def _evaluate(args: tuple[str, Instance, dict, int, int, Optional[int]]) -> BenchRow:
    instance_id, inst, threshold_cfg, exact_cutoff, crosscheck_cutoff, node_budget = args
    try:
        fns = threshold.for_instance(inst, threshold_cfg)
        result = run(inst, fns)
        if inst.num_items <= exact_cutoff:
            sol = oracle.solve_exact(inst, node_budget=node_budget)
            if sol.proof == "exact":
                opt, tag = sol.objective, "exact"
                if inst.num_items <= crosscheck_cutoff:
                    check = oracle.solve_bruteforce(inst)
                    if check.objective != sol.objective:
                        raise AssertionError(
                            f"oracle mismatch: branch-and-bound {sol.objective} "
                            f"vs enumeration {check.objective}"
                        )
            else:
                opt, tag = sol.bound, "bound"
        else:
            opt, tag = oracle.upper_bound(inst), "bound"
        ratio, infinite = _ratio(result.profit, opt)
        return BenchRow(
            instance_id=instance_id,
            n_items=inst.num_items,
            alg=result.profit,
            opt=opt,
            opt_tag=tag,
            ratio=ratio,
            infinite=infinite,
        )
    except Exception as exc:  # isolate per-instance failures into error rows
        return BenchRow(
            instance_id=instance_id,
            n_items=inst.num_items,
            alg=0.0,
            opt=0.0,
            opt_tag="error",
            ratio=math.nan,
            infinite=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def bench_suite(
    instances: Sequence[tuple[str, Instance]],
    config: Optional[BenchConfig] = None,
) -> BenchReport:
    """Run engine and oracle over a suite and assemble the report.

    ``instances`` pairs a stable id (e.g. filename) with each instance.
    With ``config.jobs > 1`` instances are evaluated in parallel; rows are
    reassembled in submission order before sorting, so reports are
    byte-reproducible either way.
    """
    cfg = config or BenchConfig()
    tasks = [
        (iid, inst, dict(cfg.threshold), cfg.exact_cutoff, cfg.crosscheck_cutoff, cfg.node_budget)
        for iid, inst in instances
    ]
    echo = cfg.to_dict()
    echo["knapsacks"] = _shared_knapsack_echo(instances, cfg)
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_evaluate, tasks))
    else:
        rows = [_evaluate(t) for t in tasks]

    exact_rows = [r for r in rows if r.opt_tag == "exact"]
    cr: Optional[float] = None
    cr_infinite = False
    if exact_rows:
        cr = max(r.ratio for r in exact_rows)
        cr_infinite = math.isinf(cr)
    finite = [r.ratio for r in exact_rows if not r.infinite]
    mean_ratio = sum(finite) / len(finite) if finite else None

    def sort_key(r: BenchRow):
        primary = -r.ratio if not math.isnan(r.ratio) else math.inf
        return (primary, r.instance_id)

    rows.sort(key=sort_key)
    return BenchReport(
        rows=rows,
        cr=cr,
        cr_infinite=cr_infinite,
        mean_ratio=mean_ratio,
        config=echo,
    )


# ---------------------------------------------------------------------------
# Gamma tuner
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TuneSpec:
    """Band-constrained grid search over the threshold curvature.

    The grid is ``grid_points`` multipliers spanning [1-delta, 1+delta],
    applied to each knapsack's default gamma, so every candidate stays
    inside the safety band [gamma_lo, gamma_hi] per knapsack.  An odd
    ``grid_points`` puts the default itself on the grid.
    """

    training: tuple[Instance, ...]
    delta: float = 0.5
    grid_points: int = 11

    def __post_init__(self) -> None:
        if not self.training:
            raise ValueError("training set must be nonempty")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.grid_points < 1:
            raise ValueError(f"grid_points must be >= 1, got {self.grid_points}")
        first = self.training[0].knapsacks
        for inst in self.training:
            if inst.knapsacks != first:
                raise ValueError("training instances must share knapsack specs")

    def multipliers(self) -> list[float]:
        if self.grid_points == 1:
            return [1.0]
        lo, hi = 1.0 - self.delta, 1.0 + self.delta
        step = (hi - lo) / (self.grid_points - 1)
        return [lo + i * step for i in range(self.grid_points)]


@dataclass
class TuneResult:
    """Tuned curvature with its full profit-vs-multiplier curve.

    Plain grid search over mean training profit, not a learned policy;
    the band keeps every candidate anchored to the analytic default.
    """

    gammas: tuple[float, ...]
    multiplier: float
    defaults: tuple[float, ...]
    bands: tuple[tuple[float, float], ...]
    curve: list[tuple[float, float]]  # (multiplier, mean profit)

    def to_dict(self) -> dict:
        return {
            "method": "band-constrained-grid-search",
            "gammas": list(self.gammas),
            "multiplier": self.multiplier,
            "default_gammas": list(self.defaults),
            "bands": [list(b) for b in self.bands],
            "curve": [{"multiplier": m, "mean_profit": p} for m, p in self.curve],
        }

    def curve_csv(self) -> str:
        out = io.StringIO()
        out.write("multiplier,mean_profit\n")
        for m, p in self.curve:
            out.write(f"{m!r},{p!r}\n")
        return out.getvalue()


def tune_gamma(spec: TuneSpec) -> TuneResult:
    """Pick the grid multiplier maximizing mean training profit.

    Ties resolve toward the multiplier closest to 1 (the analytic
    default), then toward the smaller multiplier; the returned gammas are
    always inside each knapsack's safety band.
    """
    shared = spec.training[0]
    defaults = tuple(
        threshold.default_gamma(ks.theta, ks.alpha) for ks in shared.knapsacks
    )
    curve: list[tuple[float, float]] = []
    best: Optional[tuple[float, float]] = None  # (mean profit, multiplier)
    for mult in spec.multipliers():
        total = 0.0
        for inst in spec.training:
            fns = threshold.scaled_defaults(inst, mult)
            total += run(inst, fns).profit
        mean_profit = total / len(spec.training)
        curve.append((mult, mean_profit))
        if (
            best is None
            or mean_profit > best[0] + RATIO_TOL
            or (
                abs(mean_profit - best[0]) <= RATIO_TOL
                and (abs(mult - 1.0), mult) < (abs(best[1] - 1.0), best[1])
            )
        ):
            best = (mean_profit, mult)
    assert best is not None
    mult = best[1]
    bands = tuple((g * (1.0 - spec.delta), g * (1.0 + spec.delta)) for g in defaults)
    return TuneResult(
        gammas=tuple(mult * g for g in defaults),
        multiplier=mult,
        defaults=defaults,
        bands=bands,
        curve=curve,
    )
