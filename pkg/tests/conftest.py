import numpy as np
import pytest

from cvxsysid import SystemParams, gaussian_model, leaky_relu, sample_inputs, sample_system, simulate


def make_instance(seed, n=8, p=16, T=120, spectral_alpha=0.3, rho=0.5):
    """Small recoverable instance: (params, potential, trajectory)."""
    potential = leaky_relu(rho)
    params = sample_system(n, p, spectral_alpha, potential, seed)
    inputs = sample_inputs(gaussian_model(), p, T, seed + 10_000)
    traj = simulate(params, potential, inputs, T)
    return params, potential, traj


def make_params(A, B, beta=1.0):
    return SystemParams(A_star=np.asarray(A, dtype=float),
                        B_star=np.asarray(B, dtype=float),
                        beta=float(beta))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
