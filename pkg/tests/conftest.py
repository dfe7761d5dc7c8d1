import numpy as np
import pytest

from cell_twin import NormalizedTrace, PowerLawParams, capacity


def power_law_trace(log10_a=-15.77, b=5.45, n_cycles=500, noise_std=0.0, seed=None, cell_id="syn"):
    """Noise-free (or noisy) trace generated straight from the fade model."""
    params = PowerLawParams.from_log10(log10_a, b)
    ks = np.arange(1, n_cycles + 1)
    qs = capacity(params, ks.astype(float))
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        qs = qs + rng.normal(0, noise_std, n_cycles)
    return NormalizedTrace(cell_id, ks, np.clip(qs, None, 1.14), 1.1)


@pytest.fixture
def median_params():
    return PowerLawParams.from_log10(-15.77, 5.45)
