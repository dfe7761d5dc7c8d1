"""Exponential utilities and the multi-attribute combiner.

An exponential utility phi(v) = sigma - tau * exp(-v / r) is anchored so
phi(l_u) = 0 and phi(h_u) = 1; attribute values are clamped to
[l_u, h_u] by default so the combined utility stays in [0, 1].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBounds, IncompleteTrajectory, LengthMismatch, NonPositiveRisk


class Attribute(enum.Enum):
    TOTAL_AH = "total_ah"
    MEAN_TIME_BETWEEN_CHARGES = "mtbc"


@dataclass(frozen=True)
class ExpUtility:
    l_u: float           # attribute value mapped to utility 0
    h_u: float           # attribute value mapped to utility 1
    r: float             # risk tolerance, same units
    sigma_coef: float
    tau_coef: float
    clamp: bool = True

    def value(self, v) -> float | np.ndarray:
        if self.clamp:
            v = np.clip(v, self.l_u, self.h_u)
        out = self.sigma_coef - self.tau_coef * np.exp(-np.asarray(v, dtype=float) / self.r)
        return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class AttributeSpec:
    name: str
    utility: ExpUtility
    extractor: Attribute
    weight: float


def make_exp_utility(l_u: float, h_u: float, r: float, clamp: bool = True) -> ExpUtility:
    """Build the anchored exponential utility for bounds (l_u, h_u) and risk r."""
    if h_u <= l_u:
        raise DegenerateBounds(f"h_u {h_u} must exceed l_u {l_u}")
    if r <= 0:
        raise NonPositiveRisk(f"risk tolerance must be positive, got {r}")
    e_l = math.exp(-l_u / r)
    e_h = math.exp(-h_u / r)
    return ExpUtility(
        l_u=l_u,
        h_u=h_u,
        r=r,
        sigma_coef=e_l / (e_l - e_h),
        tau_coef=1.0 / (e_l - e_h),
        clamp=clamp,
    )


def eval_utility(u: ExpUtility, v) -> float | np.ndarray:
    return u.value(v)


def total_ah(trace_q: np.ndarray, q0_ah: float, x_c: int) -> float:
    """Cumulative discharge throughput over cycles 1..x_c, in ampere-hours.

    Assumes one full discharge per cycle; `trace_q` must cover cycles
    1..x_c (index i holds cycle i+1).
    """
    if x_c == 0:
        return 0.0
    if len(trace_q) < x_c:
        raise IncompleteTrajectory(f"trajectory covers {len(trace_q)} cycles, need {x_c}")
    seg = np.asarray(trace_q[:x_c], dtype=float)
    if not np.all(np.isfinite(seg)):
        raise IncompleteTrajectory("trajectory has non-finite values inside 1..x_c")
    return float(np.sum(seg) * q0_ah)


def mtbc(q_at_xc: float, discharge_rate_c: float = 4.0) -> float:
    """Mean time between charges: full-depth discharge duration in hours.

    At the fleet's 4C discharge a fresh cell (q = 1) runs 0.25 h.
    """
    if discharge_rate_c <= 0:
        raise ValueError("discharge rate must be positive")
    return q_at_xc / discharge_rate_c


def combined_utility(specs: list[AttributeSpec], values: list[float]) -> float:
    """Weighted sum of per-attribute utilities (equal weights = plain average)."""
    if len(specs) != len(values):
        raise LengthMismatch(f"{len(specs)} specs vs {len(values)} values")
    return float(sum(s.weight * s.utility.value(v) for s, v in zip(specs, values)))


def default_attribute_specs(discharge_rate_c: float = 4.0) -> list[AttributeSpec]:
    """The two case-study attributes with their published bounds."""
    del discharge_rate_c  # bounds already expressed in hours
    return [
        AttributeSpec(
            name="total_ah",
            utility=make_exp_utility(300.0, 1000.0, 200.0),
            extractor=Attribute.TOTAL_AH,
            weight=0.5,
        ),
        AttributeSpec(
            name="mtbc",
            utility=make_exp_utility(0.21, 0.25, 0.015),
            extractor=Attribute.MEAN_TIME_BETWEEN_CHARGES,
            weight=0.5,
        ),
    ]
