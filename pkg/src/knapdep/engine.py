"""Online admission control and multi-knapsack assignment.

Items are processed strictly in input order with irrevocable decisions.
Per knapsack, an item is charged the summed marginal cost of its window
at current utilization and admitted only if its value covers the charge
and capacity holds in every requested slot.  Across knapsacks, the item
goes to the admissible knapsack of maximum value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import (
    Decision,
    Instance,
    Item,
    KnapsackSpec,
    SlotInterval,
    UtilizationState,
)
from .threshold import ThresholdFn


@dataclass(frozen=True)
class AdmissionQuery:
    """One admission check: item data against a utilization snapshot.

    ``utilization`` must cover exactly the queried window's slots.
    """

    value: float
    size: float
    interval: SlotInterval
    threshold: ThresholdFn
    utilization: Mapping[int, float]
    capacity: float


def admit(query: AdmissionQuery) -> tuple[bool, float]:
    """Decide one admission; returns (admissible, threshold value).

    The threshold value is sum(size * phi(z_t)) over the window, straight
    summation in slot order.  Admissible iff value >= threshold (ties
    admit) and z_t + size <= capacity in every slot; both comparisons are
    exact on the computed floats.
    """
    z = query.utilization
    if len(z) != query.interval.duration:
        raise ValueError(
            f"utilization snapshot has {len(z)} slots for a window of "
            f"{query.interval.duration}"
        )
    phi_total = 0.0
    fits = True
    for t in query.interval.slots():
        if t not in z:
            raise ValueError(f"utilization snapshot missing slot {t}")
        zt = z[t]
        phi_total += query.size * query.threshold.eval(zt)
        if zt + query.size > query.capacity:
            fits = False
    return (query.value >= phi_total and fits), phi_total


@dataclass(frozen=True)
class KnapsackAudit:
    """Outcome of one per-knapsack admission check."""

    knapsack: int
    phi: float
    fits: bool        # capacity clause alone
    admissible: bool  # value clause AND capacity clause


@dataclass(frozen=True)
class ItemAudit:
    item_id: int
    entries: tuple[KnapsackAudit, ...]


def step(
    item: Item,
    state: UtilizationState,
    thresholds: Sequence[ThresholdFn],
    specs: Sequence[KnapsackSpec],
) -> tuple[Decision, ItemAudit]:
    """Process one item against the current state; mutates ``state`` on admit.

    Every eligible knapsack is queried; ineligible ones never are.  Among
    admissible knapsacks the item goes to the one of maximum value, ties
    to the lowest index.
    """
    entries: list[KnapsackAudit] = []
    best: Optional[int] = None
    best_value = 0.0
    for k, opt in item.eligible_options():
        snapshot = state.snapshot(k, opt.interval)
        query = AdmissionQuery(
            value=opt.value,
            size=opt.size,
            interval=opt.interval,
            threshold=thresholds[k],
            utilization=snapshot,
            capacity=specs[k].capacity,
        )
        admissible, phi = admit(query)
        fits = all(z + opt.size <= specs[k].capacity for z in snapshot.values())
        entries.append(KnapsackAudit(knapsack=k, phi=phi, fits=fits, admissible=admissible))
        if admissible and (best is None or opt.value > best_value):
            best = k
            best_value = opt.value
    if best is not None:
        chosen = item.options[best]
        state.add(best, chosen.interval, chosen.size)
    decision = Decision(item_id=item.id, knapsack=best)
    return decision, ItemAudit(item_id=item.id, entries=tuple(entries))


@dataclass
class RunResult:
    """Full outcome of one online run: decisions, profit, state, audit."""

    decisions: list[Decision]
    profit: float
    state: UtilizationState
    audits: list[ItemAudit]

    def assignment(self) -> list[Optional[int]]:
        return [d.knapsack for d in self.decisions]

    def to_dict(self) -> dict:
        records = []
        for decision, audit in zip(self.decisions, self.audits):
            phi = None
            if decision.admitted:
                phi = next(
                    e.phi for e in audit.entries if e.knapsack == decision.knapsack
                )
            records.append(
                {
                    "id": decision.item_id,
                    "admitted": decision.admitted,
                    "knapsack": decision.knapsack,
                    "phi": phi,
                    "audit": [
                        {
                            "knapsack": e.knapsack,
                            "phi": e.phi,
                            "fits": e.fits,
                            "admissible": e.admissible,
                        }
                        for e in audit.entries
                    ],
                }
            )
        return {
            "profit": self.profit,
            "decisions": records,
            "utilization": self.state.as_dict(),
        }


def run(inst: Instance, thresholds: Sequence[ThresholdFn]) -> RunResult:
    """Run the online algorithm over all items from all-zero utilization.

    Deterministic: identical inputs produce identical outputs.
    """
    if len(thresholds) != inst.num_knapsacks:
        raise ValueError(
            f"expected {inst.num_knapsacks} thresholds, got {len(thresholds)}"
        )
    for k, (fn, spec) in enumerate(zip(thresholds, inst.knapsacks)):
        if fn.capacity != spec.capacity:
            raise ValueError(
                f"knapsack {k}: threshold capacity {fn.capacity} does not "
                f"match spec capacity {spec.capacity}"
            )
    state = UtilizationState(inst.num_knapsacks)
    decisions: list[Decision] = []
    audits: list[ItemAudit] = []
    profit = 0.0
    for item in inst.items:
        decision, audit = step(item, state, thresholds, inst.knapsacks)
        decisions.append(decision)
        audits.append(audit)
        if decision.admitted:
            profit += item.options[decision.knapsack].value
    return RunResult(decisions=decisions, profit=profit, state=state, audits=audits)
