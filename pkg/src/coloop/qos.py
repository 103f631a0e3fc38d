"""Link-layer QoS: effective capacity, delay bounds, and the two-queue tandem.

The delay model is the effective-capacity one: for a queue with capacity C
and QoS exponent theta, the probability that the queueing delay exceeds
D_max is approximately exp(-theta*C*D_max), so a loss target eps maps to
the bound D_max = -ln(eps)/(theta*C).

The closed loop chains an uplink and a downlink queue. The downlink arrival
is driven by the uplink departure process, whose envelope at exponent
theta_d is piecewise in (theta_u, theta_d); the second branch evaluates the
effective capacity at the negative exponent theta_u - theta_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .phy import (LinkConfig, RATE_MODE_NORMALIZED, finite_blocklength_rate)


@dataclass(frozen=True)
class TrafficModel:
    """Traffic generated by one control loop.

    beta   bits per sensing package
    gamma  bits per control package
    k_s    sensors per loop
    T_s    sensing period (s)
    N_cmd  control commands generated per loop
    """

    beta: float
    gamma: float
    k_s: int
    T_s: float
    N_cmd: int

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0 or self.T_s <= 0:
            raise ValueError("beta, gamma, T_s must all be > 0")
        if int(self.k_s) != self.k_s or self.k_s < 1:
            raise ValueError(f"k_s must be a positive integer, got {self.k_s}")
        if int(self.N_cmd) != self.N_cmd or self.N_cmd < 1:
            raise ValueError(f"N_cmd must be a positive integer, got {self.N_cmd}")


@dataclass(frozen=True)
class QueueQoS:
    """QoS triple of one queue: capacity, loss target, and delay bound.

    The fields are tied together by D_max = -ln(eps)/(theta*C); construct
    through from_eps to get a consistent triple.
    """

    C: float
    eps: float
    D_max: float
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if self.C < 0 or self.D_max < 0:
            raise ValueError("C and D_max must be >= 0")
        if 0.0 < self.eps < 1.0 and self.C > 0 and self.theta > 0:
            expected = -math.log(self.eps) / (self.theta * self.C)
            if abs(self.D_max - expected) > 1e-9 * max(1.0, abs(expected)):
                raise ValueError(
                    f"inconsistent QueueQoS: D_max={self.D_max!r} but "
                    f"-ln(eps)/(theta*C)={expected!r}")

    @classmethod
    def from_eps(cls, C: float, eps: float, theta: float) -> "QueueQoS":
        return cls(C=C, eps=eps, D_max=max_delay(eps, theta, C), theta=theta)


@dataclass(frozen=True)
class LoopQoS:
    """Closed-loop bound: cycle time D_c_max and loop loss eps_c."""

    D_c_max: float
    eps_c: float

    def __post_init__(self):
        if not 0.0 <= self.eps_c <= 1.0:
            raise ValueError(f"eps_c must lie in [0, 1], got {self.eps_c}")
        if self.D_c_max < 0:
            raise ValueError(f"D_c_max must be >= 0, got {self.D_c_max}")


def uplink_arrival_rate(t: TrafficModel) -> float:
    """Sensing bits offered to the uplink queue: beta*k_s/T_s."""
    return t.beta * t.k_s / t.T_s


def effective_capacity(link: LinkConfig, mode: str = RATE_MODE_NORMALIZED,
                       snr_model=None, n_samples: int = 10000, seed=None,
                       theta: float | None = None) -> float:
    """Effective capacity C = -(1/theta)*ln(E[exp(-theta*R)]).

    snr_model=None is the deterministic model: the expectation collapses and
    C equals the single rate R exactly, for any nonzero theta (including the
    negative exponents used by the tandem departure bound). Otherwise
    snr_model must be a callable (rng, n) -> linear-SNR array; the
    expectation is a seeded n_samples Monte Carlo average, computed with a
    max-shift so exponents of magnitude theta*R ~ 1e3 stay finite.
    """
    th = link.theta if theta is None else theta
    if th == 0:
        raise ValueError("effective capacity undefined at theta = 0")
    if snr_model is None:
        return finite_blocklength_rate(link, mode)
    rng = np.random.default_rng(seed)
    snrs = np.asarray(snr_model(rng, n_samples), dtype=float)
    if snrs.ndim != 1 or snrs.size == 0:
        raise ValueError("snr_model must produce a non-empty 1-D sample array")
    rates = np.array([finite_blocklength_rate(
        LinkConfig(W=link.W, snr=s, L=link.L, e=link.e, theta=link.theta), mode)
        for s in snrs])
    x = -th * rates
    m = x.max()
    log_mean = m + math.log(np.mean(np.exp(x - m)))
    return -log_mean / th


def max_delay(eps: float, theta: float, C: float) -> float:
    """Delay bound D_max = -ln(eps)/(theta*C) met with violation probability eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie strictly in (0, 1), got {eps}")
    if theta <= 0 or C <= 0:
        raise ValueError(f"theta and C must be > 0, got theta={theta}, C={C}")
    return -math.log(eps) / (theta * C)


def loop_metrics(up: QueueQoS, down: QueueQoS) -> LoopQoS:
    """Chain the two queues: delays add, survival probabilities multiply."""
    return LoopQoS(D_c_max=up.D_max + down.D_max,
                   eps_c=1.0 - (1.0 - up.eps) * (1.0 - down.eps))


def uplink_departure_rate(theta_u: float, theta_d: float, link_u: LinkConfig,
                          lambda_u: float, mode: str = RATE_MODE_NORMALIZED,
                          snr_model=None, n_samples: int = 10000, seed=None) -> float:
    """Envelope rate of the uplink departure process at exponent theta_d.

    For theta_d <= theta_u the downlink queue sees the raw arrival rate; for
    theta_d > theta_u the departure envelope mixes the uplink service
    (effective capacity at the negative exponent theta_u - theta_d) with the
    arrival rate.
    """
    if theta_u <= 0 or theta_d <= 0:
        raise ValueError("theta_u and theta_d must be > 0")
    if theta_d <= theta_u:
        return lambda_u
    C_neg = effective_capacity(link_u, mode, snr_model=snr_model,
                               n_samples=n_samples, seed=seed,
                               theta=theta_u - theta_d)
    return ((theta_d - theta_u) * C_neg + lambda_u * theta_u) / theta_d


def downlink_arrival_rate(t: TrafficModel, theta_u: float, theta_d: float,
                          link_u: LinkConfig, lambda_u: float,
                          mode: str = RATE_MODE_NORMALIZED,
                          snr_model=None, n_samples: int = 10000, seed=None) -> float:
    """Control bits offered to the downlink queue: (N*gamma/(beta*k_s)) * L_u."""
    L_u = uplink_departure_rate(theta_u, theta_d, link_u, lambda_u, mode,
                                snr_model=snr_model, n_samples=n_samples, seed=seed)
    return (t.N_cmd * t.gamma / (t.beta * t.k_s)) * L_u


def check_capacity_constraints(C_u: float, C_d: float, lambda_u: float,
                               lambda_d: float) -> tuple[float, float]:
    """Feasibility margins (C_u - lambda_u, C_d - lambda_d); both >= 0 iff feasible."""
    if min(C_u, C_d, lambda_u, lambda_d) < 0:
        raise ValueError("capacities and arrival rates must be nonnegative")
    return (C_u - lambda_u, C_d - lambda_d)
