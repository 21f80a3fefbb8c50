"""Domain types for slotted knapsack scheduling with departing items.

Items request a contiguous window of integer time slots in one of K
knapsacks; capacity is consumed only inside that window and released
afterwards.  Everything here is plain data plus validation: the admission
logic lives in :mod:`knapdep.engine`, the offline solver in
:mod:`knapdep.oracle`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional, Sequence

# Tolerance for fluctuation-bound comparisons (density/size caps).  Values
# are synthesized as density*size*duration, so re-derived densities can sit
# one ulp outside the declared bounds; 1e-9 absorbs that without masking
# real violations.
BOUND_TOL = 1e-9


class SchemaError(ValueError):
    """Raised when instance JSON does not match the documented schema."""


@dataclass(frozen=True)
class SlotInterval:
    """Contiguous window of integer slots {start, ..., start+duration-1}."""

    start: int
    duration: int

    def __post_init__(self) -> None:
        if self.start < 1:
            raise ValueError(f"interval start must be >= 1, got {self.start}")
        if self.duration < 1:
            raise ValueError(f"interval duration must be >= 1, got {self.duration}")

    @property
    def end(self) -> int:
        """Last slot of the window (inclusive)."""
        return self.start + self.duration - 1

    def slots(self) -> range:
        return range(self.start, self.start + self.duration)


@dataclass(frozen=True)
class ItemOption:
    """Per-knapsack request of an item: size, value, and slot window.

    Ineligible options are placeholders; their numeric fields are ignored
    by validation and by the engine.
    """

    eligible: bool
    size: float
    value: float
    interval: SlotInterval

    def density(self) -> float:
        """Value per unit size per slot, value / (size * duration)."""
        return self.value / (self.size * self.interval.duration)


@dataclass(frozen=True)
class Item:
    """One arriving request: arrival slot plus one option per knapsack."""

    id: int
    arrival: int
    options: tuple[ItemOption, ...]

    def eligible_options(self) -> Iterator[tuple[int, ItemOption]]:
        for k, opt in enumerate(self.options):
            if opt.eligible:
                yield k, opt


@dataclass(frozen=True)
class KnapsackSpec:
    """Capacity plus the declared fluctuation bounds of one knapsack.

    Attributes
    ----------
    capacity : float
        Capacity available in every slot.
    theta : float
        Upper bound on item value density (densities lie in [1, theta]).
    duration_lo, duration_hi : int
        Declared bounds on item durations.
    size_cap : float
        Upper bound on item size; at most ``capacity``.
    """

    capacity: float
    theta: float
    duration_lo: int
    duration_hi: int
    size_cap: float

    def __post_init__(self) -> None:
        if self.capacity <= 0:
            raise ValueError(f"capacity must be > 0, got {self.capacity}")
        if self.theta < 1:
            raise ValueError(f"theta must be >= 1, got {self.theta}")
        if self.duration_lo < 1:
            raise ValueError(f"duration_lo must be >= 1, got {self.duration_lo}")
        if self.duration_hi < self.duration_lo:
            raise ValueError(
                f"duration_hi must be >= duration_lo, got "
                f"{self.duration_hi} < {self.duration_lo}"
            )
        if not 0 < self.size_cap <= self.capacity:
            raise ValueError(
                f"size_cap must be in (0, capacity], got {self.size_cap} "
                f"with capacity {self.capacity}"
            )

    @property
    def alpha(self) -> float:
        """Duration ratio duration_hi / duration_lo."""
        return self.duration_hi / self.duration_lo


@dataclass(frozen=True)
class Instance:
    """Ordered item sequence over a slotted horizon and K knapsacks."""

    horizon: int
    knapsacks: tuple[KnapsackSpec, ...]
    items: tuple[Item, ...]

    @property
    def num_knapsacks(self) -> int:
        return len(self.knapsacks)

    @property
    def num_items(self) -> int:
        return len(self.items)


class UtilizationState:
    """Per-knapsack, per-slot committed size; the engine's only mutable state.

    Slots are stored sparsely (absent slot means zero).  Utilization only
    ever grows: departures are encoded in the time-indexed windows, never
    by decrementing.
    """

    def __init__(self, num_knapsacks: int) -> None:
        self._z: list[dict[int, float]] = [{} for _ in range(num_knapsacks)]

    @property
    def num_knapsacks(self) -> int:
        return len(self._z)

    def get(self, knapsack: int, slot: int) -> float:
        return self._z[knapsack].get(slot, 0.0)

    def snapshot(self, knapsack: int, interval: SlotInterval) -> dict[int, float]:
        """Utilization of every slot in ``interval``, including zeros."""
        zk = self._z[knapsack]
        return {t: zk.get(t, 0.0) for t in interval.slots()}

    def add(self, knapsack: int, interval: SlotInterval, size: float) -> None:
        if size < 0:
            raise ValueError("utilization updates must be nonnegative")
        zk = self._z[knapsack]
        for t in interval.slots():
            zk[t] = zk.get(t, 0.0) + size

    def as_dict(self) -> dict[str, dict[str, float]]:
        """JSON-friendly view: knapsack index -> {slot: utilization}."""
        return {
            str(k): {str(t): z for t, z in sorted(zk.items())}
            for k, zk in enumerate(self._z)
        }


@dataclass(frozen=True)
class Decision:
    """Irrevocable outcome for one item: assigned knapsack or declined."""

    item_id: int
    knapsack: Optional[int]

    @property
    def admitted(self) -> bool:
        return self.knapsack is not None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnapsackObservation:
    """Observed ranges for one knapsack, next to their declared bounds."""

    density_range: Optional[tuple[float, float]]
    duration_range: Optional[tuple[int, int]]
    max_size: float
    size_bound: Optional[float]  # capacity*ln2/gamma when gamma was supplied


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    knapsacks: list[KnapsackObservation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "knapsacks": [
                {
                    "density_range": list(o.density_range) if o.density_range else None,
                    "duration_range": list(o.duration_range) if o.duration_range else None,
                    "max_size": o.max_size,
                    "size_bound": o.size_bound,
                }
                for o in self.knapsacks
            ],
        }


def validate_instance(
    inst: Instance,
    strict: bool = False,
    gamma: Optional[Sequence[float]] = None,
) -> ValidationReport:
    """Check structure and the declared fluctuation bounds of an instance.

    Structural inconsistencies (option count mismatch, intervals outside the
    horizon, nonpositive sizes/values on eligible options, unsorted arrivals,
    duplicate ids) are always errors.  Fluctuation-bound violations (density
    outside [1, theta], duration outside its bounds, size above the cap) are
    warnings, promoted to errors when ``strict``.  A window starting before
    the item's arrival is reported as a warning only, even under strict:
    ingested traces are not rejected for it.

    When ``gamma`` supplies one value per knapsack, the report also checks
    the exponential-threshold size precondition size_cap <= capacity*ln2/gamma.
    """
    report = ValidationReport()
    K = inst.num_knapsacks

    if gamma is not None and len(gamma) != K:
        raise ValueError(f"gamma must have {K} entries, got {len(gamma)}")

    def violation(msg: str) -> None:
        (report.errors if strict else report.warnings).append(msg)

    if inst.horizon < 1:
        report.errors.append(f"horizon must be >= 1, got {inst.horizon}")

    seen_ids: set[int] = set()
    prev_arrival: Optional[int] = None
    # Per-knapsack observed stats over eligible options.
    dens_lo = [math.inf] * K
    dens_hi = [-math.inf] * K
    dur_lo = [None] * K
    dur_hi = [None] * K
    size_hi = [0.0] * K

    for item in inst.items:
        label = f"item {item.id}"
        if item.id in seen_ids:
            report.errors.append(f"duplicate item id {item.id}")
        seen_ids.add(item.id)
        if item.arrival < 1:
            report.errors.append(f"{label}: arrival must be >= 1, got {item.arrival}")
        if prev_arrival is not None and item.arrival < prev_arrival:
            report.errors.append(
                f"{label}: arrival {item.arrival} breaks nondecreasing order"
            )
        prev_arrival = item.arrival
        if len(item.options) != K:
            report.errors.append(
                f"{label}: expected {K} options, got {len(item.options)}"
            )
            continue
        if not any(opt.eligible for opt in item.options):
            report.warnings.append(f"{label}: no eligible option (vacuous item)")

        for k, opt in enumerate(item.options):
            if not opt.eligible:
                continue
            spec = inst.knapsacks[k]
            where = f"{label}, knapsack {k}"
            if opt.size <= 0:
                report.errors.append(f"{where}: nonpositive size {opt.size}")
                continue
            if opt.value <= 0:
                report.errors.append(f"{where}: nonpositive value {opt.value}")
                continue
            if opt.interval.end > inst.horizon:
                report.errors.append(
                    f"{where}: window ends at {opt.interval.end}, "
                    f"beyond horizon {inst.horizon}"
                )
                continue
            if opt.interval.start < item.arrival:
                report.warnings.append(
                    f"{where}: window starts at {opt.interval.start}, "
                    f"before arrival {item.arrival}"
                )

            d = opt.interval.duration
            rho = opt.density()
            if rho < 1 - BOUND_TOL:
                violation(f"{where}: density {rho} below 1")
            if rho > spec.theta + BOUND_TOL * spec.theta:
                violation(f"{where}: density {rho} above theta {spec.theta}")
            if d < spec.duration_lo:
                violation(f"{where}: duration {d} below {spec.duration_lo}")
            if d > spec.duration_hi:
                violation(f"{where}: duration {d} above {spec.duration_hi}")
            if opt.size > spec.size_cap + BOUND_TOL * spec.size_cap:
                violation(f"{where}: size {opt.size} above cap {spec.size_cap}")

            dens_lo[k] = min(dens_lo[k], rho)
            dens_hi[k] = max(dens_hi[k], rho)
            dur_lo[k] = d if dur_lo[k] is None else min(dur_lo[k], d)
            dur_hi[k] = d if dur_hi[k] is None else max(dur_hi[k], d)
            size_hi[k] = max(size_hi[k], opt.size)

    for k, spec in enumerate(inst.knapsacks):
        bound = None
        if gamma is not None:
            bound = spec.capacity * math.log(2.0) / gamma[k]
            if size_hi[k] > bound + BOUND_TOL * bound:
                violation(
                    f"knapsack {k}: max size {size_hi[k]} exceeds "
                    f"capacity*ln2/gamma = {bound}"
                )
        report.knapsacks.append(
            KnapsackObservation(
                density_range=(dens_lo[k], dens_hi[k]) if dens_hi[k] >= dens_lo[k] else None,
                duration_range=(dur_lo[k], dur_hi[k]) if dur_lo[k] is not None else None,
                max_size=size_hi[k],
                size_bound=bound,
            )
        )
    return report


@dataclass(frozen=True)
class ObservedParams:
    """Tightest fluctuation parameters consistent with one knapsack's items."""

    theta: float
    alpha: float
    max_size: float


def observed_parameters(inst: Instance) -> list[ObservedParams]:
    """Observed (theta, alpha, max size) per knapsack over eligible options.

    A knapsack with no eligible item reports the degenerate (1, 1, 0).
    Order-independent over item permutations.
    """
    out: list[ObservedParams] = []
    for k in range(inst.num_knapsacks):
        densities: list[float] = []
        durations: list[int] = []
        sizes: list[float] = []
        for item in inst.items:
            opt = item.options[k]
            if not opt.eligible:
                continue
            densities.append(opt.density())
            durations.append(opt.interval.duration)
            sizes.append(opt.size)
        if not sizes:
            out.append(ObservedParams(1.0, 1.0, 0.0))
        else:
            out.append(
                ObservedParams(
                    theta=max(densities),
                    alpha=max(durations) / min(durations),
                    max_size=max(sizes),
                )
            )
    return out


def assignment_violations(
    inst: Instance, assignment: Sequence[Optional[int]]
) -> list[str]:
    """Audit an assignment against capacity and eligibility, from scratch.

    ``assignment[i]`` is the knapsack of ``inst.items[i]`` or None.  Loads
    are re-accumulated independently of any engine state; comparisons are
    exact.  Returns one message per violation (empty list = feasible).
    """
    if len(assignment) != inst.num_items:
        raise ValueError(
            f"assignment has {len(assignment)} entries for {inst.num_items} items"
        )
    violations: list[str] = []
    load: dict[tuple[int, int], float] = {}
    for item, k in zip(inst.items, assignment):
        if k is None:
            continue
        if not 0 <= k < inst.num_knapsacks:
            violations.append(f"item {item.id}: assigned to unknown knapsack {k}")
            continue
        opt = item.options[k]
        if not opt.eligible:
            violations.append(f"item {item.id}: assigned to ineligible knapsack {k}")
            continue
        for t in opt.interval.slots():
            load[(k, t)] = load.get((k, t), 0.0) + opt.size
    for (k, t), z in sorted(load.items()):
        cap = inst.knapsacks[k].capacity
        if z > cap:
            violations.append(
                f"knapsack {k}, slot {t}: load {z} exceeds capacity {cap}"
            )
    return violations


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------

_KNAPSACK_FIELDS = ("capacity", "theta", "duration_lo", "duration_hi", "size_cap")
_ITEM_FIELDS = ("id", "arrival", "options")
_OPTION_FIELDS = ("eligible", "size", "value", "start", "duration")
_INSTANCE_FIELDS = ("horizon", "knapsacks", "items")


def instance_to_dict(inst: Instance) -> dict:
    return {
        "horizon": inst.horizon,
        "knapsacks": [
            {
                "capacity": ks.capacity,
                "theta": ks.theta,
                "duration_lo": ks.duration_lo,
                "duration_hi": ks.duration_hi,
                "size_cap": ks.size_cap,
            }
            for ks in inst.knapsacks
        ],
        "items": [
            {
                "id": it.id,
                "arrival": it.arrival,
                "options": [
                    {
                        "eligible": opt.eligible,
                        "size": opt.size,
                        "value": opt.value,
                        "start": opt.interval.start,
                        "duration": opt.interval.duration,
                    }
                    for opt in it.options
                ],
            }
            for it in inst.items
        ],
    }


def _require_fields(obj: Mapping, fields: Sequence[str], where: str) -> None:
    if not isinstance(obj, Mapping):
        raise SchemaError(f"{where}: expected an object")
    unknown = set(obj) - set(fields)
    if unknown:
        raise SchemaError(f"{where}: unknown fields {sorted(unknown)}")
    missing = set(fields) - set(obj)
    if missing:
        raise SchemaError(f"{where}: missing fields {sorted(missing)}")


def _number(obj: Mapping, key: str, where: str) -> float:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}: field '{key}' must be a number")
    return float(v)


def _integer(obj: Mapping, key: str, where: str) -> int:
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{where}: field '{key}' must be an integer")
    return v


def instance_from_dict(data: Mapping) -> Instance:
    """Parse the instance schema; unknown or missing fields are rejected."""
    _require_fields(data, _INSTANCE_FIELDS, "instance")
    horizon = _integer(data, "horizon", "instance")
    if not isinstance(data["knapsacks"], list):
        raise SchemaError("instance: 'knapsacks' must be an array")
    if not isinstance(data["items"], list):
        raise SchemaError("instance: 'items' must be an array")

    knapsacks = []
    for k, kobj in enumerate(data["knapsacks"]):
        where = f"knapsack {k}"
        _require_fields(kobj, _KNAPSACK_FIELDS, where)
        try:
            knapsacks.append(
                KnapsackSpec(
                    capacity=_number(kobj, "capacity", where),
                    theta=_number(kobj, "theta", where),
                    duration_lo=_integer(kobj, "duration_lo", where),
                    duration_hi=_integer(kobj, "duration_hi", where),
                    size_cap=_number(kobj, "size_cap", where),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from exc

    items = []
    for i, iobj in enumerate(data["items"]):
        where = f"item at position {i}"
        _require_fields(iobj, _ITEM_FIELDS, where)
        if not isinstance(iobj["options"], list):
            raise SchemaError(f"{where}: 'options' must be an array")
        options = []
        for k, oobj in enumerate(iobj["options"]):
            owhere = f"{where}, option {k}"
            _require_fields(oobj, _OPTION_FIELDS, owhere)
            if not isinstance(oobj["eligible"], bool):
                raise SchemaError(f"{owhere}: field 'eligible' must be a boolean")
            try:
                interval = SlotInterval(
                    start=_integer(oobj, "start", owhere),
                    duration=_integer(oobj, "duration", owhere),
                )
            except ValueError as exc:
                raise SchemaError(f"{owhere}: {exc}") from exc
            options.append(
                ItemOption(
                    eligible=oobj["eligible"],
                    size=_number(oobj, "size", owhere),
                    value=_number(oobj, "value", owhere),
                    interval=interval,
                )
            )
        items.append(
            Item(
                id=_integer(iobj, "id", where),
                arrival=_integer(iobj, "arrival", where),
                options=tuple(options),
            )
        )
    return Instance(horizon=horizon, knapsacks=tuple(knapsacks), items=tuple(items))


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2)


def loads_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return instance_from_dict(data)
