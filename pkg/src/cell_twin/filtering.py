"""Sequential-importance-resampling particle filter over (log10 a, b).

State transition is a Gaussian random walk: additive on log10(a) so the
tiny fade coefficient stays positive and scale-preserving, additive on b
with reflection at zero.  The power-law capacity model supplies the
Gaussian measurement likelihood; weights are updated in log space and
the ensemble is systematically resampled when the effective sample size
drops below a configurable fraction of the particle count.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import NormalizedTrace
from .errors import DegenerateWeights
from .model import NoiseSpec, PowerLawParams

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LN10 = math.log(10.0)


@dataclass(frozen=True)
class FilterConfig:
    n_particles: int = 1000
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    init_log10_a: float = -15.77
    init_b: float = 5.45
    init_spread_log10_a: float = 0.5
    init_spread_b: float = 0.5
    resample_threshold: float = 0.5   # ESS fraction of n triggering resampling
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        if self.init_spread_log10_a <= 0 or self.init_spread_b <= 0:
            raise ValueError("initial spreads must be positive")
        if not 0.0 < self.resample_threshold <= 1.0:
            raise ValueError("resample_threshold must be in (0, 1]")


@dataclass
class ParticleEnsemble:
    """Weighted particle cloud; mutated in place by `step`.

    Steps for one cell must be applied sequentially (single-owner state);
    ensembles for distinct cells are independent.
    """

    log10_a: np.ndarray
    b: np.ndarray
    weights: np.ndarray
    last_cycle: int
    rng: np.random.Generator
    resample_threshold: float = 0.5
    seed: int = 0

    @property
    def n(self) -> int:
        return len(self.weights)

    def params_at(self, i: int) -> PowerLawParams:
        return PowerLawParams.from_log10(self.log10_a[i], self.b[i])

    def ess(self) -> float:
        return 1.0 / float(np.sum(self.weights ** 2))

    def copy(self) -> "ParticleEnsemble":
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = self.rng.bit_generator.state
        return ParticleEnsemble(
            log10_a=self.log10_a.copy(),
            b=self.b.copy(),
            weights=self.weights.copy(),
            last_cycle=self.last_cycle,
            rng=rng,
            resample_threshold=self.resample_threshold,
            seed=self.seed,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "last_cycle": self.last_cycle,
                "seed": self.seed,
                "resample_threshold": self.resample_threshold,
                "log10_a": self.log10_a.tolist(),
                "b": self.b.tolist(),
                "weight": self.weights.tolist(),
                "rng_state": self.rng.bit_generator.state,
            }
        )

    @classmethod
    def from_json(cls, s: str) -> "ParticleEnsemble":
        d = json.loads(s)
        rng = np.random.Generator(np.random.PCG64())
        rng.bit_generator.state = d["rng_state"]
        return cls(
            log10_a=np.asarray(d["log10_a"], dtype=float),
            b=np.asarray(d["b"], dtype=float),
            weights=np.asarray(d["weight"], dtype=float),
            last_cycle=int(d["last_cycle"]),
            rng=rng,
            resample_threshold=float(d.get("resample_threshold", 0.5)),
            seed=int(d["seed"]),
        )


def init(config: FilterConfig) -> ParticleEnsemble:
    """Draw the initial cloud around the fleet-median parameters."""
    rng = np.random.default_rng(config.seed)
    n = config.n_particles
    log10_a = rng.normal(config.init_log10_a, config.init_spread_log10_a, size=n)
    b = rng.normal(config.init_b, config.init_spread_b, size=n)
    # truncate b to positive by redrawing (negligible rejection at defaults)
    while np.any(b <= 0):
        bad = b <= 0
        b[bad] = rng.normal(config.init_b, config.init_spread_b, size=int(bad.sum()))
    return ParticleEnsemble(
        log10_a=log10_a,
        b=b,
        weights=np.full(n, 1.0 / n),
        last_cycle=0,
        rng=rng,
        resample_threshold=config.resample_threshold,
        seed=config.seed,
    )


def systematic_resample(weights: np.ndarray, u: float) -> np.ndarray:
    """Index array for systematic resampling from a single uniform draw u."""
    n = len(weights)
    positions = (u + np.arange(n)) / n
    cumsum = np.cumsum(weights)
    cumsum[-1] = 1.0  # guard rounding
    return np.searchsorted(cumsum, positions, side="right")


def step(ens: ParticleEnsemble, k: int, q_obs: float, noise: NoiseSpec) -> ParticleEnsemble:
    """One predict / update / resample cycle against measurement (k, q_obs)."""
    if not np.isfinite(q_obs):
        raise ValueError(f"q_obs must be finite, got {q_obs!r}")
    if k <= ens.last_cycle:
        raise ValueError(f"cycle {k} not after last assimilated cycle {ens.last_cycle}")

    n = ens.n
    # predict: random walk on (log10 a, b), b reflected at zero
    ens.log10_a += ens.rng.normal(0.0, noise.sigma_log_a, size=n)
    ens.b += ens.rng.normal(0.0, noise.sigma_b, size=n)
    np.abs(ens.b, out=ens.b)

    # update: Gaussian likelihood of q_obs, combined in log space; runaway
    # particles overflow to -inf log-likelihood, which is the intended value
    with np.errstate(over="ignore"):
        q_pred = 1.0 - np.exp(_LN10 * ens.log10_a + ens.b * math.log(k))
        log_lik = (
            -0.5 * ((q_obs - q_pred) / noise.sigma_meas) ** 2
            - math.log(noise.sigma_meas)
            - _LOG_SQRT_2PI
        )
    with np.errstate(divide="ignore"):  # zero weights map cleanly to -inf
        log_w = np.log(ens.weights) + log_lik
    m = np.max(log_w)
    if not np.isfinite(m):
        raise DegenerateWeights(f"all particle likelihoods vanished at cycle {k}")
    w = np.exp(log_w - m)
    ens.weights = w / np.sum(w)

    # resample on ESS collapse
    if ens.ess() < ens.resample_threshold * n:
        idx = systematic_resample(ens.weights, float(ens.rng.random()))
        ens.log10_a = ens.log10_a[idx]
        ens.b = ens.b[idx]
        ens.weights = np.full(n, 1.0 / n)

    ens.last_cycle = k
    return ens


def assimilate(
    ens: ParticleEnsemble,
    trace: NormalizedTrace,
    upto_cycle: int,
    noise: NoiseSpec,
) -> ParticleEnsemble:
    """Fold `step` over measured (k, q) pairs with last_cycle < k <= upto_cycle."""
    mask = (trace.cycles > ens.last_cycle) & (trace.cycles <= upto_cycle)
    for k, q in zip(trace.cycles[mask], trace.q[mask]):
        try:
            step(ens, int(k), float(q), noise)
        except DegenerateWeights as e:
            raise DegenerateWeights(f"{trace.cell_id}: {e}") from None
    return ens


def posterior_summary(ens: ParticleEnsemble) -> tuple[float, float, np.ndarray]:
    """Weighted mean and 2x2 covariance in (log10 a, b) coordinates."""
    w = ens.weights
    mean_la = float(np.sum(w * ens.log10_a))
    mean_b = float(np.sum(w * ens.b))
    d = np.stack([ens.log10_a - mean_la, ens.b - mean_b])
    cov = (d * w) @ d.T
    return mean_la, mean_b, cov
