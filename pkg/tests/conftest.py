import numpy as np
import pytest

from priorwave import (
    AngularGrid,
    ArrayConfig,
    MixtureUniform,
    compute_moments,
    papr_project,
)


@pytest.fixture(scope="session")
def cfg12():
    """Case 1-2 array: M_t = M_r = 8, L = 25, P = 1, kappa = 1.2."""
    return ArrayConfig(m_t=8, m_r=8, l_samples=25, power=1.0, papr=1.2, noise_power=1.0)


@pytest.fixture(scope="session")
def dist12():
    """Case 1-2 prior: single uniform interval [-10, 10] degrees."""
    return MixtureUniform(intervals=((-np.pi / 18, np.pi / 18),), weights=(1.0,))


@pytest.fixture(scope="session")
def mom12(dist12, cfg12):
    return compute_moments(dist12, cfg12)


@pytest.fixture(scope="session")
def grid361():
    return AngularGrid.uniform(361)


def random_feasible_waveform(rng, cfg, kappa=None):
    """Random waveform polished onto the power sphere and element cap."""
    kappa = cfg.papr if kappa is None else kappa
    bound = kappa * cfg.power / (cfg.m_t * cfg.l_samples)
    x = rng.normal(size=(cfg.m_t, cfg.l_samples)) + 1j * rng.normal(
        size=(cfg.m_t, cfg.l_samples)
    )
    for _ in range(100):
        x = papr_project(x, bound)
        x = x * np.sqrt(cfg.power / np.sum(np.abs(x) ** 2))
        if np.max(np.abs(x) ** 2) <= bound * (1 + 1e-12):
            break
    return x
