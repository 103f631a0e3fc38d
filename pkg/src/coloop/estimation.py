"""Multi-sensor observation and fusion.

k_s sensors observe the same device state through additive Gaussian noise;
the fused estimate is the component-wise mean, so its per-component error
variance is sigma^2 / k_s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STATE_DIM = 3  # [position (m), velocity (m/s), acceleration (m/s^2)]


def as_state(x) -> np.ndarray:
    """Coerce to a finite float vector of length 3."""
    arr = np.asarray(x, dtype=float)
    if arr.shape != (STATE_DIM,):
        raise ValueError(f"state vector must have shape ({STATE_DIM},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"state vector must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class SensingConfig:
    """Sensing stage parameters.

    Attributes
    ----------
    k_s : int
        Number of sensors observing the device per loop.
    sigma : float
        Per-sensor, per-component observation noise standard deviation
        (state units). One shared value for all three components.
    T_s : float
        Sensing period in seconds.
    beta : float
        Bits per sensing package.
    """

    k_s: int
    sigma: float
    T_s: float = 0.05
    beta: float = 1000.0

    def __post_init__(self):
        if int(self.k_s) != self.k_s or self.k_s < 1:
            raise ValueError(f"k_s must be a positive integer, got {self.k_s}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.T_s <= 0:
            raise ValueError(f"T_s must be > 0, got {self.T_s}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class ObservationSet:
    """One loop's worth of sensor readings.

    observations: (k_s, 3) array, one row per sensor.
    truth: the generating state when known (simulation only); fuse never
    reads it, it exists so records can carry estimation-error audits.
    """

    observations: np.ndarray
    truth: np.ndarray | None = field(default=None)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 2 or obs.shape[1] != STATE_DIM:
            raise ValueError(f"observations must be (k_s, {STATE_DIM}), got {obs.shape}")
        object.__setattr__(self, "observations", obs)
        if self.truth is not None:
            object.__setattr__(self, "truth", as_state(self.truth))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_observations(truth, cfg: SensingConfig, seed) -> ObservationSet:
    """Draw one observation per sensor: Y_i = X + N_i.

    Noise is zero-mean Gaussian, i.i.d. across sensors and across the three
    state components, standard deviation cfg.sigma. `seed` may be an int,
    a numpy SeedSequence, or an already-split numpy Generator; the same seed
    always yields the same observations.
    """
    truth = as_state(truth)
    rng = _as_generator(seed)
    noise = rng.normal(0.0, cfg.sigma, size=(cfg.k_s, STATE_DIM)) if cfg.sigma > 0 \
        else np.zeros((cfg.k_s, STATE_DIM))
    return ObservationSet(observations=truth[None, :] + noise, truth=truth)


def fuse(obs: ObservationSet) -> np.ndarray:
    """Component-wise mean of the observation set."""
    if obs.observations.shape[0] == 0:
        raise ValueError("cannot fuse an empty observation set")
    return obs.observations.mean(axis=0)


def estimation_mse(cfg: SensingConfig) -> float:
    """Per-component error variance of the fused estimate: sigma^2 / k_s."""
    return cfg.sigma**2 / cfg.k_s
