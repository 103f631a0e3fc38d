import numpy as np
import pytest

from coloop.codesign import CodesignProblem, SolverOptions, solve
from coloop.estimation import SensingConfig
from coloop.phy import LinkConfig
from coloop.plant import StabilityWeights, build_plant, default_stability_weights
from coloop.qos import TrafficModel


def make_problem(k_s=10, sigma=1.5, W_0=1.5e6, D_0=0.15, N=10,
                 snr_u=20.0, snr_d=30.0, L=200, e_u=0.001, e_d=0.002,
                 theta_u=0.001, theta_d=0.002, varsigma=0.125, T_d=0.05,
                 T_s=0.05, beta=1000.0, gamma=20.0, X_ini=(100.0, 0.0, 0.0),
                 weights=None, rate_mode="normalized") -> CodesignProblem:
    """Baseline-table problem with keyword overrides."""
    plant = build_plant(varsigma=varsigma, T_d=T_d)
    if weights is None:
        weights = default_stability_weights(plant)
    return CodesignProblem(
        plant=plant,
        weights=weights,
        traffic=TrafficModel(beta=beta, gamma=gamma, k_s=k_s, T_s=T_s, N_cmd=N),
        sensing=SensingConfig(k_s=k_s, sigma=sigma, T_s=T_s, beta=beta),
        link_u=LinkConfig(W=1.0, snr=snr_u, L=L, e=e_u, theta=theta_u),
        link_d=LinkConfig(W=1.0, snr=snr_d, L=L, e=e_d, theta=theta_d),
        W_0=W_0, D_0=D_0, X_ini=np.array(X_ini), horizon=N,
        rate_mode=rate_mode)


def random_psd(rng, dim=3, scale=1.0):
    A = rng.standard_normal((dim, dim))
    M = A @ A.T + 0.1 * np.eye(dim)
    return scale * M / np.abs(M).max()


def random_problem(rng) -> CodesignProblem:
    """Random plant/weights/start for gradient and identity checks."""
    plant = build_plant(varsigma=float(rng.uniform(0.08, 0.3)),
                        T_d=float(rng.uniform(0.02, 0.08)))
    weights = StabilityWeights(P=random_psd(rng),
                               R_w=float(rng.uniform(1e-4, 1e-2)),
                               S=random_psd(rng))
    k_s = int(rng.integers(2, 20))
    return make_problem(k_s=k_s, sigma=float(rng.uniform(0.2, 3.0)),
                        varsigma=plant.varsigma, T_d=plant.T_d,
                        X_ini=rng.normal(0.0, 30.0, 3), weights=weights)


# cheap options for tests that only need a structurally valid solve
FAST_OPTS = SolverOptions(n_w_grid=6, n_eps_grid=6, refine_iters=8,
                          penalty_rounds=2, gd_max_iters=60)


@pytest.fixture(scope="session")
def baseline_problem():
    return make_problem()


@pytest.fixture(scope="session")
def baseline_solution(baseline_problem):
    """Full-options solve of the baseline problem; shared because it takes
    a few seconds."""
    return solve(baseline_problem, SolverOptions())


@pytest.fixture(scope="session")
def fast_solution(baseline_problem):
    return solve(baseline_problem, FAST_OPTS)
