"""Vehicle dynamics, Euler discretization, and the stochastic stability test.

State X = [position, velocity, acceleration]. The engine lag varsigma gives

    A = [[0,1,0],[0,0,1],[0,0,-1/varsigma]],  B = [0,0,-1/varsigma]^T

discretized as A_tilde = T_d*A + I, B_tilde = T_d*B. A delivered command u
drives the plant through B_tilde; a lost one (eta=0) leaves pure drift.

The stability test is the expected one-step Lyapunov decrease: with
V(X) = X^T P X, sensing error covariance (sigma^2/k_s) I and delivery
probability 1 - eps_c,

    E[V(X_next) | X] - V(X) = (1 - eps_c) * F1 - F2

so the loop is contracting at X exactly when (1 - eps_c) * F1 <= F2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimation import STATE_DIM, as_state


@dataclass(frozen=True)
class PlantModel:
    varsigma: float  # engine constant (s)
    T_d: float       # discretization step (s)
    A: np.ndarray
    B: np.ndarray
    A_tilde: np.ndarray
    B_tilde: np.ndarray


def build_plant(varsigma: float, T_d: float) -> PlantModel:
    """Construct the continuous matrices and their Euler discretization."""
    if varsigma == 0:
        raise ValueError("varsigma=0 makes the engine dynamics singular")
    if T_d <= 0:
        raise ValueError(f"T_d must be > 0, got {T_d}")
    A = np.array([[0.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0],
                  [0.0, 0.0, -1.0 / varsigma]])
    B = np.array([0.0, 0.0, -1.0 / varsigma])
    return PlantModel(varsigma=varsigma, T_d=T_d, A=A, B=B,
                      A_tilde=T_d * A + np.eye(STATE_DIM), B_tilde=T_d * B)


@dataclass(frozen=True)
class GainSchedule:
    """Per-step feedback rows K_t over one planning horizon."""

    gains: np.ndarray  # (horizon, 3)
    horizon: int

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.shape != (self.horizon, STATE_DIM):
            raise ValueError(
                f"gains must have shape ({self.horizon}, {STATE_DIM}), got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "gains", g)


def _check_psd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (STATE_DIM, STATE_DIM):
        raise ValueError(f"{name} must be {STATE_DIM}x{STATE_DIM}, got {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")
    min_eig = float(np.linalg.eigvalsh(M).min())
    if min_eig < -1e-9 * max(1.0, float(np.abs(M).max())):
        raise ValueError(f"{name} must be positive semidefinite "
                         f"(min eigenvalue {min_eig:.3e})")
    return M


@dataclass(frozen=True)
class StabilityWeights:
    """Shared Lyapunov / cost weights: V(X) = X^T P X, stage control weight
    R_w, terminal weight S."""

    P: np.ndarray
    R_w: float
    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", _check_psd(self.P, "P"))
        object.__setattr__(self, "S", _check_psd(self.S, "S"))
        if self.R_w < 0:
            raise ValueError(f"R_w must be >= 0, got {self.R_w}")


# Fixed weights for the default certificate construction; see
# default_stability_weights.
_CERT_Q = np.diag([1.0, 0.1, 0.01])
_CERT_R = 0.01


def default_stability_weights(plant: PlantModel) -> StabilityWeights:
    """Certified default weights built from the plant itself.

    An identity P cannot work here: from a pure-position state (the braking
    start [d,0,0]) the first column of A_tilde is e1, so F2 = 0 exactly for
    any P, while with P = I every nonzero command strictly increases
    E[V(X_next)] (F1 > 0). The decrease condition would pin the whole gain
    schedule at zero and the vehicle would never brake.

    Instead P is the discrete Riccati solution for (A_tilde, B_tilde) under
    fixed internal weights. Its position/acceleration cross terms give
    braking commands a strictly negative F1 at the braking start, and V
    decreases along the nominal closed loop with margin X^T Q X, so the
    decrease constraint has interior slack around useful gain schedules.
    S is the same matrix, and (P, R_w, S) are normalized jointly by P[0,0]
    so the position error enters the cost with unit weight while the
    cost-minimizing feedback is unchanged.
    """
    from scipy.linalg import solve_discrete_are

    P = solve_discrete_are(plant.A_tilde, plant.B_tilde.reshape(STATE_DIM, 1),
                           _CERT_Q, np.array([[_CERT_R]]))
    P = np.asarray(P)
    scale = P[0, 0]
    P = 0.5 * (P + P.T) / scale
    return StabilityWeights(P=P, R_w=_CERT_R / scale, S=P.copy())


def _command(K, X) -> float:
    K = np.asarray(K, dtype=float).reshape(STATE_DIM)
    return float(K @ X)


def step_expected(p: PlantModel, X, K, eps_c: float) -> np.ndarray:
    """Prediction-model step: A_tilde X + (1-eps_c) B_tilde (K X)."""
    if not 0.0 <= eps_c <= 1.0:
        raise ValueError(f"eps_c must lie in [0, 1], got {eps_c}")
    X = as_state(X)
    return p.A_tilde @ X + (1.0 - eps_c) * p.B_tilde * _command(K, X)


def step_stochastic(p: PlantModel, X_true, X_hat, K, eta: int) -> np.ndarray:
    """Realized step: command from the estimate, dynamics from the truth,
    delivery indicator eta in {0, 1}."""
    if eta not in (0, 1):
        raise ValueError(f"eta must be 0 or 1, got {eta}")
    X_true = as_state(X_true)
    return p.A_tilde @ X_true + eta * p.B_tilde * _command(K, as_state(X_hat))


def lyapunov_terms(p: PlantModel, P, X, K, sigma: float, k_s: int) -> tuple[float, float]:
    """The two sides of the expected-decrease test at state X under gain K.

    F1 = (AX + BKX)^T P (AX + BKX) + Tr[(BK)^T P (BK)] sigma^2/k_s - (AX)^T P (AX)
    F2 = X^T P X - (AX)^T P (AX)

    with A, B the discretized matrices. The trace collapses to
    (B^T P B) ||K||^2 since B is a column.
    """
    P = _check_psd(P, "P")
    if sigma < 0 or k_s < 1:
        raise ValueError("sigma must be >= 0 and k_s >= 1")
    X = as_state(X)
    K = np.asarray(K, dtype=float).reshape(STATE_DIM)
    Z = p.A_tilde @ X
    Y = Z + p.B_tilde * float(K @ X)
    zPz = float(Z @ P @ Z)
    bPb = float(p.B_tilde @ P @ p.B_tilde)
    F1 = float(Y @ P @ Y) + bPb * float(K @ K) * (sigma**2 / k_s) - zPz
    F2 = float(X @ P @ X) - zPz
    return F1, F2


def stability_holds(F1: float, F2: float, eps_c: float,
                    tol: float | None = None) -> tuple[bool, float]:
    """Test (1-eps_c) F1 <= F2; returns (holds, signed residual).

    Default tolerance is the hybrid 1e-9*(1+|F2|) since both terms scale
    with |X|^2.
    """
    if not 0.0 <= eps_c <= 1.0:
        raise ValueError(f"eps_c must lie in [0, 1], got {eps_c}")
    if tol is None:
        tol = 1e-9 * (1.0 + abs(F2))
    residual = (1.0 - eps_c) * F1 - F2
    return residual <= tol, residual
