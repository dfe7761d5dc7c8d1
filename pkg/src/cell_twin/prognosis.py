"""Capacity projection and end-of-life / RUL distributions.

Each particle's parameters are frozen and its deterministic power-law
trajectory rolled forward; the end of life per particle comes from the
analytic inversion of the fade model, so the empirical EOL distribution
is exact for the ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .filtering import ParticleEnsemble

_LN10 = math.log(10.0)


def weighted_quantile(values: np.ndarray, weights: np.ndarray, level: float) -> float:
    """Lower weighted quantile: smallest value with cumulative weight >= level."""
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    idx = int(np.searchsorted(cum, level, side="left"))
    idx = min(idx, len(values) - 1)
    return float(values[order][idx])


@dataclass(frozen=True)
class CapacityProjection:
    from_cycle: int
    horizon_cycle: int
    median_q: np.ndarray                       # per cycle, floored at eol_threshold
    quantile_bands: dict[float, np.ndarray]
    per_particle_eol: np.ndarray
    eol_weights: np.ndarray
    eol_threshold: float

    @property
    def cycles(self) -> np.ndarray:
        return np.arange(self.from_cycle, self.horizon_cycle + 1)

    def export_csv_rows(self):
        """Rows for the cycle,median_q,q05,q95 plot-data export."""
        lo = self.quantile_bands.get(0.05)
        hi = self.quantile_bands.get(0.95)
        for i, k in enumerate(self.cycles):
            row = [int(k), self.median_q[i]]
            row.append(lo[i] if lo is not None else "")
            row.append(hi[i] if hi is not None else "")
            yield row


@dataclass(frozen=True)
class RulPrediction:
    at_cycle: int
    rul_median: float
    rul_quantiles: dict[float, float]
    eol_threshold: float


class EolDistribution:
    """Weighted empirical distribution over per-particle end-of-life cycles."""

    def __init__(self, eols: np.ndarray, weights: np.ndarray):
        order = np.argsort(eols, kind="stable")
        self.eols = np.asarray(eols, dtype=float)[order]
        self.weights = np.asarray(weights, dtype=float)[order]
        self.cum = np.cumsum(self.weights)
        self.cum[-1] = 1.0

    def cdf(self, x: float) -> float:
        """Right-continuous CDF: total weight of EOLs <= x."""
        idx = int(np.searchsorted(self.eols, x, side="right"))
        return 0.0 if idx == 0 else float(self.cum[idx - 1])

    def quantile(self, level: float) -> float:
        """Lower quantile: smallest EOL with cumulative weight >= level."""
        idx = int(np.searchsorted(self.cum, level, side="left"))
        idx = min(idx, len(self.eols) - 1)
        return float(self.eols[idx])


def project(
    ens: ParticleEnsemble,
    from_cycle: int,
    eol_threshold: float = 0.5,
    quantiles: tuple[float, ...] = (0.05, 0.95),
) -> CapacityProjection:
    """Roll every particle forward deterministically and summarize.

    The horizon is capped at the weighted 99th percentile of the
    per-particle analytic EOLs to bound output size.
    """
    if from_cycle < ens.last_cycle:
        raise ValueError("cannot project from before the last assimilated cycle")
    log_fade_coef = _LN10 * ens.log10_a                      # ln a per particle
    eols = np.exp((math.log(1.0 - eol_threshold) - log_fade_coef) / ens.b)
    horizon = int(math.ceil(weighted_quantile(eols, ens.weights, 0.99)))
    horizon = max(horizon, from_cycle)

    cycles = np.arange(from_cycle, horizon + 1)
    # (n_particles, n_cycles) trajectory matrix, frozen parameters
    traj = 1.0 - np.exp(log_fade_coef[:, None] + np.outer(ens.b, np.log(cycles)))

    order = np.argsort(traj, axis=0, kind="stable")
    sorted_traj = np.take_along_axis(traj, order, axis=0)
    cum = np.cumsum(ens.weights[order], axis=0)
    cum[-1, :] = 1.0

    def column_quantile(level: float) -> np.ndarray:
        out = np.empty(len(cycles))
        for j in range(len(cycles)):
            idx = min(int(np.searchsorted(cum[:, j], level, side="left")), len(ens.weights) - 1)
            out[j] = sorted_traj[idx, j]
        return out

    median_q = np.maximum(column_quantile(0.5), eol_threshold)
    bands = {lvl: np.maximum(column_quantile(lvl), eol_threshold) for lvl in quantiles}
    return CapacityProjection(
        from_cycle=from_cycle,
        horizon_cycle=horizon,
        median_q=median_q,
        quantile_bands=bands,
        per_particle_eol=eols,
        eol_weights=ens.weights.copy(),
        eol_threshold=eol_threshold,
    )


def eol_distribution(proj: CapacityProjection) -> EolDistribution:
    return EolDistribution(proj.per_particle_eol, proj.eol_weights)


def rul(
    proj: CapacityProjection,
    at_cycle: int,
    quantiles: tuple[float, ...] = (0.05, 0.95),
) -> RulPrediction:
    """Remaining useful life distribution at `at_cycle`, clamped at zero."""
    ruls = np.maximum(proj.per_particle_eol - at_cycle, 0.0)
    w = proj.eol_weights
    return RulPrediction(
        at_cycle=at_cycle,
        rul_median=weighted_quantile(ruls, w, 0.5),
        rul_quantiles={lvl: weighted_quantile(ruls, w, lvl) for lvl in quantiles},
        eol_threshold=proj.eol_threshold,
    )
