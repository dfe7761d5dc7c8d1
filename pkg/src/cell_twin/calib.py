"""Offline fleet calibration of the power-law fade model.

Per-cell fits start from the log-linearization ln(1 - q) = ln a + b ln k
(exact on noise-free data, no initialization needed) and by default are
polished against the q-space squared error.  Fleet medians seed the
online filter; total-Ah percentiles inform the throughput utility
bounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .dataset import NormalizedTrace
from .errors import InsufficientFade, NoFitsSucceeded
from .model import PowerLawParams

FADE_EPS = 1e-4       # points with q >= 1 - FADE_EPS carry no usable fade signal
MIN_FIT_POINTS = 10


@dataclass(frozen=True)
class FleetFit:
    per_cell: dict[str, tuple[float, float, float]]  # cell_id -> (log10_a, b, rmse)
    median_log10_a: float
    median_b: float
    ah_percentiles: dict[int, float]                 # percentile -> Ah
    failed_cells: tuple[str, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "median_log10_a": self.median_log10_a,
                "median_b": self.median_b,
                "ah_percentiles": {str(p): v for p, v in self.ah_percentiles.items()},
                "failed_cells": list(self.failed_cells),
                "per_cell": [
                    {"cell_id": c, "log10_a": la, "b": b, "rmse": r}
                    for c, (la, b, r) in sorted(self.per_cell.items())
                ],
            }
        )

    @classmethod
    def from_json(cls, s: str) -> "FleetFit":
        d = json.loads(s)
        return cls(
            per_cell={e["cell_id"]: (e["log10_a"], e["b"], e["rmse"]) for e in d["per_cell"]},
            median_log10_a=d["median_log10_a"],
            median_b=d["median_b"],
            ah_percentiles={int(p): v for p, v in d["ah_percentiles"].items()},
            failed_cells=tuple(d.get("failed_cells", ())),
        )


def lower_median(values) -> float:
    """Smallest value with cumulative count >= half (deterministic for even n)."""
    v = np.sort(np.asarray(values, dtype=float))
    return float(v[(len(v) - 1) // 2])


def fit_power_law(trace: NormalizedTrace, polish: bool = True) -> tuple[PowerLawParams, float]:
    """Fit (a, b) to the measured portion of a trace.

    A variance-weighted log-linear OLS on ln(1 - q) = ln a + b ln k gives
    the deterministic, initialization-free starting point (exact on
    noise-free data).  By default a Levenberg-Marquardt polish then
    minimizes the q-space squared error: the log-space fit is badly
    biased by near-unity points whose noise rivals the fade signal, and
    the polish removes that bias while leaving exact fits untouched.
    Returns the parameters and the RMSE of the reconstructed q over the
    qualifying points.  Extrapolated tail points are excluded.
    """
    mask = trace.measured_mask & (trace.q < 1.0 - FADE_EPS)
    if int(mask.sum()) < MIN_FIT_POINTS:
        raise InsufficientFade(
            f"{trace.cell_id}: only {int(mask.sum())} points below 1 - {FADE_EPS}"
        )
    k = trace.cycles[mask].astype(float)
    q = trace.q[mask]
    ln_k = np.log(k)
    y = np.log(1.0 - q)
    sw = 1.0 - q  # delta method: std of ln(1-q) scales as 1/(1-q)
    design = np.stack([ln_k, np.ones(len(k))], axis=1)
    b, ln_a = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)[0]
    if polish:
        def resid(p):
            return (1.0 - np.exp(p[0] + p[1] * ln_k)) - q

        ln_a, b = least_squares(resid, [ln_a, b], method="lm").x
    params = PowerLawParams(a=float(np.exp(ln_a)), b=float(b))
    q_hat = 1.0 - np.exp(ln_a + b * ln_k)
    rmse = float(np.sqrt(np.mean((q_hat - q) ** 2)))
    return params, rmse


def total_measured_ah(trace: NormalizedTrace) -> float:
    """Total discharge throughput over the measured (non-extrapolated) life."""
    m = trace.measured_mask
    return float(np.sum(trace.q[m]) * trace.q0_ah)


def fleet_calibrate(
    train: list[NormalizedTrace], percentiles: tuple[int, ...] = (5, 50, 95)
) -> FleetFit:
    """Fit every training cell and reduce to fleet medians and Ah percentiles."""
    per_cell = {}
    failed = []
    ahs = []
    for trace in train:
        try:
            params, rmse = fit_power_law(trace)
        except InsufficientFade:
            failed.append(trace.cell_id)
            continue
        per_cell[trace.cell_id] = (params.log10_a, params.b, rmse)
        ahs.append(total_measured_ah(trace))
    if not per_cell:
        raise NoFitsSucceeded("no training cell produced a usable fit")
    las = [v[0] for v in per_cell.values()]
    bs = [v[1] for v in per_cell.values()]
    ah_sorted = np.sort(ahs)
    # lower empirical percentile, consistent with the median convention
    pct = {
        p: float(ah_sorted[min(int(np.ceil(p / 100 * len(ah_sorted))) - 1, len(ah_sorted) - 1)])
        if p > 0 else float(ah_sorted[0])
        for p in percentiles
    }
    return FleetFit(
        per_cell=per_cell,
        median_log10_a=lower_median(las),
        median_b=lower_median(bs),
        ah_percentiles=pct,
        failed_cells=tuple(failed),
    )
