"""Instance generators and CSV trace ingestion.

All generators are deterministic functions of their spec: the PRNG is
Python's ``random.Random`` (MT19937) seeded from the spec, and the draw
order per item is fixed, so identical specs reproduce byte-identical
instances across platforms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Optional, Sequence

from .core import (
    Instance,
    Item,
    ItemOption,
    KnapsackSpec,
    SlotInterval,
)

FAMILIES = ("uniform", "staircase", "burst")


@dataclass(frozen=True)
class GenSpec:
    """Parameters of a generated workload.

    ``knapsacks`` carries the declared fluctuation bounds the items are
    drawn within, so generated instances always pass strict validation.
    """

    family: str
    n: int
    horizon: int
    knapsacks: tuple[KnapsackSpec, ...]
    seed: int
    eligibility: float = 1.0

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.knapsacks:
            raise ValueError("at least one knapsack is required")
        if not 0.0 <= self.eligibility <= 1.0:
            raise ValueError(f"eligibility must be in [0, 1], got {self.eligibility}")


def _check_durations_fit(spec: GenSpec) -> int:
    max_hi = max(ks.duration_hi for ks in spec.knapsacks)
    if spec.horizon - max_hi < 1:
        raise ValueError(
            f"horizon {spec.horizon} too short for max duration {max_hi}; "
            f"need horizon >= duration_hi + 1"
        )
    return max_hi


def _draw_item(rng: Random, item_id: int, arrival: int, spec: GenSpec) -> Item:
    """One item: per knapsack draw duration, start, size, density, eligibility.

    Sizes land in (0, size_cap], densities in [1, theta], and
    value = density * size * duration, so Assumption-style bounds hold by
    construction.
    """
    options = []
    for ks in spec.knapsacks:
        duration = rng.randint(ks.duration_lo, ks.duration_hi)
        start = rng.randint(arrival, spec.horizon - duration + 1)
        size = ks.size_cap * (1.0 - rng.random())
        density = rng.uniform(1.0, ks.theta)
        eligible = spec.eligibility >= 1.0 or rng.random() < spec.eligibility
        if eligible:
            options.append(
                ItemOption(
                    eligible=True,
                    size=size,
                    value=density * size * duration,
                    interval=SlotInterval(start=start, duration=duration),
                )
            )
        else:
            options.append(
                ItemOption(
                    eligible=False,
                    size=0.0,
                    value=0.0,
                    interval=SlotInterval(start=1, duration=1),
                )
            )
    return Item(id=item_id, arrival=arrival, options=tuple(options))


def gen_uniform(spec: GenSpec) -> Instance:
    """Uniform workload: arrivals uniform over [1, horizon - max duration]."""
    max_hi = _check_durations_fit(spec)
    rng = Random(spec.seed)
    arrivals = sorted(rng.randint(1, spec.horizon - max_hi) for _ in range(spec.n))
    items = tuple(
        _draw_item(rng, item_id, arrival, spec)
        for item_id, arrival in enumerate(arrivals)
    )
    return Instance(horizon=spec.horizon, knapsacks=spec.knapsacks, items=items)


def gen_burst(spec: GenSpec) -> Instance:
    """Bursty workload: arrivals cluster around a few burst slots.

    Same per-item draws as the uniform family; only the arrival process
    differs.  Burst count scales with sqrt(n).
    """
    max_hi = _check_durations_fit(spec)
    rng = Random(spec.seed)
    hi = spec.horizon - max_hi
    n_bursts = max(1, round(math.sqrt(spec.n)))
    centers = [rng.randint(1, hi) for _ in range(n_bursts)]
    arrivals = sorted(
        min(hi, max(1, round(rng.gauss(rng.choice(centers), max(1.0, hi / 20.0)))))
        for _ in range(spec.n)
    )
    items = tuple(
        _draw_item(rng, item_id, arrival, spec)
        for item_id, arrival in enumerate(arrivals)
    )
    return Instance(horizon=spec.horizon, knapsacks=spec.knapsacks, items=items)


def gen_staircase(spec: GenSpec, levels: int) -> list[Instance]:
    """Single-knapsack density staircase, returned as prefix instances.

    ``levels`` batches all request the same slot window; batch ``l``
    (1-based) has density theta**((l-1)/(levels-1)), a geometric ladder
    from 1 up to theta, and total size equal to the capacity, split into
    equal items no larger than the size cap.  Because later batches may
    simply never arrive, the generator emits one instance per prefix:
    instance ``l`` contains batches 1..l and is an exact item-sequence
    prefix of instance ``l+1``.  The item count is
    ``levels * ceil(capacity / size_cap)``, independent of ``spec.n``.

    This is a lower-bound probe of how the achievable ratio grows with
    theta; it is a house construction, not a proven worst case.
    """
    if len(spec.knapsacks) != 1:
        raise ValueError("staircase family is defined for exactly one knapsack")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    ks = spec.knapsacks[0]
    duration = ks.duration_lo
    if duration > spec.horizon:
        raise ValueError(
            f"horizon {spec.horizon} too short for duration {duration}"
        )
    per_batch = math.ceil(ks.capacity / ks.size_cap)
    size = ks.capacity / per_batch
    window = SlotInterval(start=1, duration=duration)

    items: list[Item] = []
    prefixes: list[Instance] = []
    item_id = 0
    for level in range(1, levels + 1):
        density = ks.theta ** ((level - 1) / (levels - 1))
        for _ in range(per_batch):
            items.append(
                Item(
                    id=item_id,
                    arrival=1,
                    options=(
                        ItemOption(
                            eligible=True,
                            size=size,
                            value=density * size * duration,
                            interval=window,
                        ),
                    ),
                )
            )
            item_id += 1
        prefixes.append(
            Instance(
                horizon=spec.horizon,
                knapsacks=spec.knapsacks,
                items=tuple(items),
            )
        )
    return prefixes


def generate(spec: GenSpec, levels: int = 4) -> list[Instance]:
    """Dispatch on the family tag; always returns a list of instances."""
    if spec.family == "uniform":
        return [gen_uniform(spec)]
    if spec.family == "burst":
        return [gen_burst(spec)]
    if spec.family == "staircase":
        return gen_staircase(spec, levels)
    raise ValueError(f"unknown family {spec.family!r}")


# ---------------------------------------------------------------------------
# Trace ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceMapping:
    """Column names and policies for turning a CSV trace into an instance.

    ``value`` may be None: values are then synthesized at the midpoint
    density of [1, theta].  ``start`` defaults to the arrival column.
    ``violation_policy`` handles rows breaking the declared bounds:
    "clamp" pulls them inside, "drop" removes them; both are counted.
    ``assign_policy`` is "replicate" (every row eligible for all
    knapsacks) or "partition" (row i eligible only for knapsack i mod K).
    """

    arrival: str
    size: str
    duration: str
    value: Optional[str] = None
    start: Optional[str] = None
    violation_policy: str = "clamp"
    assign_policy: str = "replicate"
    error_tolerance: float = 0.01

    def __post_init__(self) -> None:
        if self.violation_policy not in ("clamp", "drop"):
            raise ValueError(f"unknown violation policy {self.violation_policy!r}")
        if self.assign_policy not in ("replicate", "partition"):
            raise ValueError(f"unknown assign policy {self.assign_policy!r}")
        if not 0.0 <= self.error_tolerance <= 1.0:
            raise ValueError("error_tolerance must be in [0, 1]")


@dataclass
class IngestStats:
    rows_read: int = 0
    rows_kept: int = 0
    rows_dropped: int = 0
    rows_clamped: int = 0
    bad_rows: list[int] = field(default_factory=list)  # 1-based data row numbers

    def to_dict(self) -> dict:
        return {
            "rows_read": self.rows_read,
            "rows_kept": self.rows_kept,
            "rows_dropped": self.rows_dropped,
            "rows_clamped": self.rows_clamped,
            "bad_rows": list(self.bad_rows),
        }


def _clamp_row(
    ks: KnapsackSpec,
    size: float,
    duration: int,
    value: Optional[float],
    max_duration: int,
) -> Optional[tuple[float, int, Optional[float]]]:
    """Pull one row inside the declared bounds and the horizon.

    Duration is clamped first (also against the remaining horizon room),
    then size, then value against the density band of the final size and
    duration.  Returns None when no valid clamp exists (no room before the
    horizon), which the caller treats as a drop.
    """
    hi = min(ks.duration_hi, max_duration)
    if hi < ks.duration_lo:
        return None
    duration = min(max(duration, ks.duration_lo), hi)
    size = min(size, ks.size_cap)
    if value is not None:
        value = min(max(value, size * duration), ks.theta * size * duration)
    return size, duration, value


def _row_violates(
    ks: KnapsackSpec,
    size: float,
    duration: int,
    value: Optional[float],
    max_duration: int,
) -> bool:
    if not ks.duration_lo <= duration <= min(ks.duration_hi, max_duration):
        return True
    if size > ks.size_cap:
        return True
    if value is not None:
        density = value / (size * duration)
        if not 1.0 <= density <= ks.theta:
            return True
    return False


def ingest_trace(
    path: str | Path,
    mapping: TraceMapping,
    knapsacks: Sequence[KnapsackSpec],
    horizon: Optional[int] = None,
) -> tuple[Instance, IngestStats]:
    """Build an instance from a CSV trace of job-scheduling-style rows.

    Rows must parse to arrival >= 1, size > 0, duration >= 1 (and value
    > 0 when mapped); rows that do not are skipped, and the whole ingest
    fails with their row numbers if they exceed ``error_tolerance`` as a
    fraction of data rows.  The horizon defaults to the latest requested
    slot; with an explicit horizon, overruns fall under the violation
    policy (clamp shortens the window, drop removes the row).
    """
    path = Path(path)
    knapsacks = tuple(knapsacks)
    stats = IngestStats()
    rows: list[tuple[int, int, float, int, Optional[float]]] = []

    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty trace, no header row")
        needed = [mapping.arrival, mapping.size, mapping.duration]
        if mapping.value is not None:
            needed.append(mapping.value)
        if mapping.start is not None:
            needed.append(mapping.start)
        missing = [c for c in needed if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")

        for row_no, row in enumerate(reader, start=1):
            stats.rows_read += 1
            try:
                arrival = int(float(row[mapping.arrival]))
                size = float(row[mapping.size])
                duration = int(float(row[mapping.duration]))
                start = (
                    int(float(row[mapping.start]))
                    if mapping.start is not None
                    else arrival
                )
                value = (
                    float(row[mapping.value]) if mapping.value is not None else None
                )
                if arrival < 1 or start < 1 or size <= 0 or duration < 1:
                    raise ValueError("out of domain")
                if value is not None and value <= 0:
                    raise ValueError("out of domain")
            except (ValueError, TypeError):
                stats.bad_rows.append(row_no)
                continue
            rows.append((arrival, start, size, duration, value))

    if stats.rows_read and len(stats.bad_rows) / stats.rows_read > mapping.error_tolerance:
        raise ValueError(
            f"{path}: {len(stats.bad_rows)} unparseable rows "
            f"(rows {stats.bad_rows}) exceed tolerance {mapping.error_tolerance}"
        )

    if horizon is None:
        horizon = max((start + duration - 1 for _, start, _, duration, _ in rows), default=1)

    items: list[Item] = []
    for idx, (arrival, start, size, duration, value) in enumerate(
        sorted(rows, key=lambda r: r[0])
    ):
        options: list[ItemOption] = []
        dropped = False
        clamped_any = False
        room = horizon - start + 1
        for k, ks in enumerate(knapsacks):
            eligible = mapping.assign_policy == "replicate" or idx % len(knapsacks) == k
            if not eligible:
                options.append(
                    ItemOption(False, 0.0, 0.0, SlotInterval(start=1, duration=1))
                )
                continue
            k_size, k_dur, k_val = size, duration, value
            if _row_violates(ks, size, duration, value, room):
                if mapping.violation_policy == "drop":
                    dropped = True
                    break
                clamp = _clamp_row(ks, size, duration, value, room)
                if clamp is None:
                    dropped = True
                    break
                k_size, k_dur, k_val = clamp
                clamped_any = True
            if k_val is None:
                density = (1.0 + ks.theta) / 2.0
                k_val = density * k_size * k_dur
            options.append(
                ItemOption(
                    eligible=True,
                    size=k_size,
                    value=k_val,
                    interval=SlotInterval(start=start, duration=k_dur),
                )
            )
        if dropped:
            stats.rows_dropped += 1
            continue
        if clamped_any:
            stats.rows_clamped += 1
        stats.rows_kept += 1
        items.append(Item(id=len(items), arrival=arrival, options=tuple(options)))

    inst = Instance(horizon=horizon, knapsacks=knapsacks, items=tuple(items))
    return inst, stats
