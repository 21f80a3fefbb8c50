"""Threshold functions mapping knapsack utilization to marginal cost.

The admission engine charges an item ``sum(size * phi(z_t))`` over its
requested slots and admits only if the item's value covers that charge.
The exponential family ``phi(z) = exp(z*gamma/capacity) - 1`` is the
default; a tabulated piecewise-linear kind is provided so ablations and
the tuner can plug in alternative shapes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Mapping

from .core import Instance, KnapsackSpec


class ThresholdFn(abc.ABC):
    """Nondecreasing marginal-cost curve on [0, capacity] with phi(0) = 0."""

    kind: str
    capacity: float

    @abc.abstractmethod
    def eval(self, z: float) -> float:
        """Marginal cost per unit size per slot at utilization ``z``."""

    def _check_domain(self, z: float) -> None:
        if z < 0 or z > self.capacity:
            raise ValueError(
                f"utilization {z} outside [0, {self.capacity}]"
            )


@dataclass(frozen=True)
class ExponentialThreshold(ThresholdFn):
    """phi(z) = exp(z*gamma/capacity) - 1, so phi(0)=0 and phi(C)=exp(gamma)-1."""

    gamma: float
    capacity: float
    kind = "exponential"

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.capacity <= 0:
            raise ValueError(f"capacity must be > 0, got {self.capacity}")

    def eval(self, z: float) -> float:
        self._check_domain(z)
        return math.exp(z * self.gamma / self.capacity) - 1.0


@dataclass(frozen=True)
class TableThreshold(ThresholdFn):
    """Piecewise-linear curve over a supplied grid of (z, phi) points.

    The grid must start at (0, 0), have strictly increasing z, and be
    nondecreasing in phi; capacity is the last grid point's z.
    """

    points: tuple[tuple[float, float], ...]
    kind = "table"

    def __post_init__(self) -> None:
        if len(self.points) < 2:
            raise ValueError("table needs at least two points")
        z0, p0 = self.points[0]
        if z0 != 0.0 or p0 != 0.0:
            raise ValueError("table must start at (0, 0)")
        for (za, pa), (zb, pb) in zip(self.points, self.points[1:]):
            if zb <= za:
                raise ValueError("table z values must be strictly increasing")
            if pb < pa:
                raise ValueError("table phi values must be nondecreasing")

    @property
    def capacity(self) -> float:  # type: ignore[override]
        return self.points[-1][0]

    def eval(self, z: float) -> float:
        self._check_domain(z)
        pts = self.points
        for (za, pa), (zb, pb) in zip(pts, pts[1:]):
            if z <= zb:
                return pa + (pb - pa) * (z - za) / (zb - za)
        return pts[-1][1]


def default_gamma(theta: float, alpha: float) -> float:
    """Default curvature ln(1 + alpha*theta).

    With this choice the full-utilization marginal cost phi(capacity)
    equals alpha*theta, the maximum value per unit size per slot scaled
    by the duration ratio, which makes the default auditable.  Callers
    may override it wherever a gamma is accepted.
    """
    if theta < 1:
        raise ValueError(f"theta must be >= 1, got {theta}")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    return math.log(1.0 + alpha * theta)


def size_precondition(capacity: float, gamma: float) -> float:
    """Largest item size cap compatible with the competitive guarantee.

    Returns capacity * ln2 / gamma.
    """
    if capacity <= 0:
        raise ValueError(f"capacity must be > 0, got {capacity}")
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return capacity * math.log(2.0) / gamma


def from_config(config: Mapping, spec: KnapsackSpec) -> ThresholdFn:
    """Build a threshold from experiment-file config for one knapsack.

    Schema: {"kind": "exponential", "gamma": float | "auto"} where "auto"
    means ``default_gamma`` from the knapsack's declared theta and alpha;
    or {"kind": "table", "points": [[z, phi], ...]}.
    """
    kind = config.get("kind", "exponential")
    if kind == "exponential":
        gamma = config.get("gamma", "auto")
        if gamma == "auto":
            gamma = default_gamma(spec.theta, spec.alpha)
        elif isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
            raise ValueError(f"gamma must be a number or 'auto', got {gamma!r}")
        return ExponentialThreshold(gamma=float(gamma), capacity=spec.capacity)
    if kind == "table":
        points = tuple((float(z), float(p)) for z, p in config["points"])
        fn = TableThreshold(points=points)
        if fn.capacity != spec.capacity:
            raise ValueError(
                f"table capacity {fn.capacity} does not match "
                f"knapsack capacity {spec.capacity}"
            )
        return fn
    raise ValueError(f"unknown threshold kind {kind!r}")


def for_instance(inst: Instance, config: Mapping | None = None) -> list[ThresholdFn]:
    """One threshold per knapsack of ``inst`` from a shared config."""
    cfg = {"kind": "exponential", "gamma": "auto"} if config is None else config
    return [from_config(cfg, spec) for spec in inst.knapsacks]


def scaled_defaults(inst: Instance, multiplier: float = 1.0) -> list[ExponentialThreshold]:
    """Exponential thresholds at ``multiplier`` times each default gamma."""
    if multiplier <= 0:
        raise ValueError(f"multiplier must be > 0, got {multiplier}")
    return [
        ExponentialThreshold(
            gamma=multiplier * default_gamma(spec.theta, spec.alpha),
            capacity=spec.capacity,
        )
        for spec in inst.knapsacks
    ]
