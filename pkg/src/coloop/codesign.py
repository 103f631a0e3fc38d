"""Joint resource/control design.

The decision variables are the bandwidth split (W_u, W_d), the per-link
delay-violation targets (eps_u, eps_d), and the gain schedule K_1..K_N.
Cost is the quadratic control cost of the expected rollout; constraints are
uplink/downlink capacity, the cycle-time budget, the per-step expected
Lyapunov decrease, the bandwidth budget, and the loss-probability box.

Solver layout (replaces an off-the-shelf NLP solver so results stay
dependency-free and bit-reproducible):

  outer  coarse grid over the bandwidth split and a shared log-spaced loss
         target, then coordinate-descent refinement of (W_u, eps_u, eps_d)
         on the W_u + W_d = W_0 face;
  inner  for fixed resources the loss probabilities only enter the rollout
         through eps_c, so J is minimized over the gain schedule by
         gradient descent with analytic gradients (backpropagation through
         the linear recursion) under an exterior quadratic penalty for the
         decrease constraint, weight x10 per round.

Only the rollout cost depends on the resources (through eps_c), so inner
solutions are memoized per eps_c and reused across bandwidth candidates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .estimation import STATE_DIM, SensingConfig, as_state, estimation_mse
from .phy import LinkConfig, RATE_MODE_NORMALIZED, RATE_MODES, LinkInfeasibleError
from .plant import GainSchedule, PlantModel, StabilityWeights
from .qos import (LoopQoS, TrafficModel, downlink_arrival_rate,
                  effective_capacity, loop_metrics, max_delay, QueueQoS,
                  uplink_arrival_rate)

STATUS_CONVERGED = "converged"
STATUS_INFEASIBLE = "infeasible"
STATUS_ITERATION_LIMIT = "iteration-limit"


@dataclass(frozen=True)
class CodesignProblem:
    plant: PlantModel
    weights: StabilityWeights
    traffic: TrafficModel
    sensing: SensingConfig
    link_u: LinkConfig   # template; W is overwritten by the solver
    link_d: LinkConfig   # template; W is overwritten by the solver
    W_0: float           # total bandwidth budget (Hz)
    D_0: float           # cycle-time budget (s)
    X_ini: np.ndarray
    horizon: int
    rate_mode: str = RATE_MODE_NORMALIZED

    def __post_init__(self):
        if self.W_0 <= 0:
            raise ValueError(f"W_0 must be > 0, got {self.W_0}")
        if self.D_0 <= 0:
            raise ValueError(f"D_0 must be > 0, got {self.D_0}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.rate_mode not in RATE_MODES:
            raise ValueError(f"unknown rate mode {self.rate_mode!r}")
        if self.traffic.k_s != self.sensing.k_s:
            raise ValueError("traffic.k_s and sensing.k_s must agree")
        object.__setattr__(self, "X_ini", as_state(self.X_ini))


@dataclass
class CodesignSolution:
    gains: GainSchedule
    W_u: float
    W_d: float
    eps_u: float
    eps_d: float
    derived: LoopQoS
    cost_J: float
    residuals: dict
    status: str
    info: dict = field(default_factory=dict)

    @property
    def eps_c(self) -> float:
        return self.derived.eps_c


@dataclass(frozen=True)
class SolverOptions:
    n_w_grid: int = 16
    n_eps_grid: int = 16
    eps_min: float = 1e-6
    eps_max: float = 0.5
    refine_iters: int = 50
    penalty_rounds: int = 4
    penalty_init: float = 10.0
    penalty_growth: float = 10.0
    gd_max_iters: int = 200
    gd_tol: float = 1e-6      # gradient sup-norm stop, relative to 1+|objective|
    feas_tol: float = 1e-6    # constraint residual acceptance, relative per scale
    time_invariant_gains: bool = False

    def __post_init__(self):
        if self.n_w_grid < 1 or self.n_eps_grid < 1:
            raise ValueError("grid sizes must be >= 1")
        if not 0 < self.eps_min <= self.eps_max < 1:
            raise ValueError("need 0 < eps_min <= eps_max < 1")
        if self.penalty_rounds < 1 or self.penalty_growth <= 0 or self.penalty_init <= 0:
            raise ValueError("penalty schedule must be positive")


def combined_loss(eps_u: float, eps_d: float) -> float:
    return 1.0 - (1.0 - eps_u) * (1.0 - eps_d)


# ---------------------------------------------------------------------------
# cost and expected rollout


def control_cost(states, commands, weights: StabilityWeights) -> float:
    """Quadratic cost: sum of X^T P X + R_w u^2 over the N-1 command steps
    plus the terminal X^T S X."""
    states = np.asarray(states, dtype=float)
    commands = np.asarray(commands, dtype=float)
    if states.ndim != 2 or states.shape[1] != STATE_DIM:
        raise ValueError(f"states must be (N, {STATE_DIM}), got {states.shape}")
    n = states.shape[0]
    if commands.shape != (n - 1,):
        raise ValueError(
            f"expected {n - 1} commands for {n} states, got {commands.shape}")
    J = 0.0
    for t in range(n - 1):
        J += float(states[t] @ weights.P @ states[t]) + weights.R_w * float(commands[t]**2)
    J += float(states[-1] @ weights.S @ states[-1])
    return J


def rollout_expected(problem: CodesignProblem, gains: GainSchedule,
                     eps_c: float) -> np.ndarray:
    """Expected-model trajectory X_1..X_N under the first N-1 gain rows."""
    if gains.horizon != problem.horizon:
        raise ValueError(f"gain schedule horizon {gains.horizon} != problem "
                         f"horizon {problem.horizon}")
    if not 0.0 <= eps_c <= 1.0:
        raise ValueError(f"eps_c must lie in [0, 1], got {eps_c}")
    n = problem.horizon
    A, B = problem.plant.A_tilde, problem.plant.B_tilde
    c = 1.0 - eps_c
    states = np.empty((n, STATE_DIM))
    states[0] = problem.X_ini
    for t in range(n - 1):
        u = float(gains.gains[t] @ states[t])
        states[t + 1] = A @ states[t] + c * B * u
    return states


# ---------------------------------------------------------------------------
# inner solver: gain schedule for fixed eps_c


def _augmented_objective(problem: CodesignProblem, free: np.ndarray,
                         eps_c: float, mu: float,
                         want_grad: bool) -> tuple[float, np.ndarray | None]:
    """Objective J + mu * sum_t relu((1-eps_c) F1_t - F2_t)^2 over the free
    gain rows K_1..K_{N-1} (the terminal row is tied to the last free row),
    with its analytic gradient via reverse accumulation when requested.

    The decrease penalty runs over all N rollout states, including the
    terminal state under the tied gain, so the schedule the simulator ships
    is the one that was certified.
    """
    n = problem.horizon
    A, B = problem.plant.A_tilde, problem.plant.B_tilde
    P, S, R_w = problem.weights.P, problem.weights.S, problem.weights.R_w
    c = 1.0 - eps_c
    s2 = estimation_mse(problem.sensing)
    bPb = float(B @ P @ B)

    # forward
    X = np.empty((n, STATE_DIM))
    X[0] = problem.X_ini
    u = np.empty(n - 1)
    for t in range(n - 1):
        u[t] = free[t] @ X[t]
        X[t + 1] = A @ X[t] + (c * u[t]) * B
    J = float(X[n - 1] @ S @ X[n - 1])
    for t in range(n - 1):
        J += float(X[t] @ P @ X[t]) + R_w * u[t]**2

    # decrease-penalty terms (t over all N states; gain row tied at the end)
    pen = 0.0
    g_vals = np.empty(n)
    if mu > 0.0:
        for t in range(n):
            k = free[min(t, n - 2)]
            Z = A @ X[t]
            v = float(k @ X[t])
            Y = Z + v * B
            zPz = float(Z @ P @ Z)
            F1 = float(Y @ P @ Y) + bPb * float(k @ k) * s2 - zPz
            F2 = float(X[t] @ P @ X[t]) - zPz
            g_vals[t] = c * F1 - F2
            if g_vals[t] > 0.0:
                pen += g_vals[t]**2
    phi = J + mu * pen
    if not want_grad:
        return phi, None

    grad = np.zeros_like(free)
    lam = 2.0 * (S @ X[n - 1])  # dphi/dX at the terminal state
    for t in range(n - 1, -1, -1):
        if mu > 0.0 and g_vals[t] > 0.0:
            k_idx = min(t, n - 2)
            k = free[k_idx]
            Z = A @ X[t]
            v = float(k @ X[t])
            Y = Z + v * B
            PY = P @ Y
            w = 2.0 * mu * g_vals[t]
            # dg/dX = c*dF1/dX - dF2/dX
            dF1_dX = 2.0 * (A.T @ (PY - P @ Z)) + 2.0 * float(B @ PY) * k
            dF2_dX = 2.0 * (P @ X[t]) - 2.0 * (A.T @ (P @ Z))
            lam += w * (c * dF1_dX - dF2_dX)
            grad[k_idx] += w * c * (2.0 * float(B @ PY) * X[t] + 2.0 * bPb * s2 * k)
        if t > 0:
            tp = t - 1
            # stage cost at tp and dynamics X[t] = A X[tp] + c*u*B
            grad[tp] += (c * float(B @ lam)) * X[tp] + 2.0 * R_w * u[tp] * X[tp]
            lam_prev = A.T @ lam + (c * float(B @ lam)) * free[tp] \
                + 2.0 * (P @ X[tp]) + 2.0 * R_w * u[tp] * free[tp]
            lam = lam_prev
    return phi, grad


def cost_and_gradient(problem: CodesignProblem, free_gains: np.ndarray,
                      eps_c: float, penalty_weight: float = 0.0
                      ) -> tuple[float, np.ndarray]:
    """Augmented objective and its analytic gradient over the free gain rows
    (shape (N-1, 3)). penalty_weight=0 gives the plain cost J."""
    free = np.asarray(free_gains, dtype=float)
    n = problem.horizon
    if free.shape != (n - 1, STATE_DIM):
        raise ValueError(f"free gains must be ({n - 1}, {STATE_DIM}), got {free.shape}")
    phi, grad = _augmented_objective(problem, free, eps_c, penalty_weight, True)
    return phi, grad


def _tie_schedule(free: np.ndarray, horizon: int) -> GainSchedule:
    gains = np.vstack([free, free[-1:]]) if horizon > 1 else np.zeros((1, STATE_DIM))
    return GainSchedule(gains=gains, horizon=horizon)


def stationary_feedback(plant: PlantModel, weights: StabilityWeights) -> np.ndarray:
    """One-step-lookahead feedback row: argmin_u R_w u^2 + V(A X + B u) with
    V(X) = X^T P X, i.e. -(B^T P B + R_w)^-1 B^T P A. With the default
    Riccati-based weights this is the stationary infinite-horizon policy."""
    A, B = plant.A_tilde, plant.B_tilde
    P, R_w = weights.P, weights.R_w
    denom = float(B @ P @ B) + R_w
    if denom <= 0.0 or not np.isfinite(denom):
        return np.zeros(STATE_DIM)
    row = -(B @ P @ A) / denom
    return row if np.all(np.isfinite(row)) else np.zeros(STATE_DIM)


def optimize_gains(problem: CodesignProblem, eps_c: float,
                   opts: SolverOptions = SolverOptions(),
                   init_free: np.ndarray | None = None,
                   constraints_enabled: bool = True
                   ) -> tuple[GainSchedule, dict]:
    """Inner solver: minimize the rollout cost over the gain schedule at
    fixed eps_c, decrease constraint by exterior quadratic penalty.

    Returns the tied N-row schedule and an info dict with the per-round
    trace of accepted objective values, iteration counts, and whether the
    final round stopped on the gradient test.

    Default initialization is the stationary one-step-lookahead row repeated
    over the horizon, not zeros: gain entries the rollout cost cannot see
    (state components that are exactly zero along the nominal trajectory,
    like the start-of-braking velocity) keep their damping values from the
    stationary policy instead of collapsing to zero, which is what makes the
    schedule behave off-nominal when the simulator replans from noisy
    states. Descent from there never increases J, so optimality claims are
    unaffected.
    """
    n = problem.horizon
    if n == 1:
        return _tie_schedule(np.zeros((0, STATE_DIM)), 1), {
            "phi_trace": [], "iters": 0, "converged": True}
    if init_free is None:
        row = stationary_feedback(problem.plant, problem.weights)
        free = np.tile(row, (n - 1, 1))
    else:
        free = np.asarray(init_free, dtype=float).copy()
    # constraint-free mode keeps the same round count (each round restarts
    # the line-search step) so costs stay comparable across the two modes
    mus = [opts.penalty_init * opts.penalty_growth**r
           for r in range(opts.penalty_rounds)] if constraints_enabled \
        else [0.0] * opts.penalty_rounds
    trace = []
    total_iters = 0
    converged = False
    alpha = None
    for mu in mus:
        round_trace = []
        phi, grad = _augmented_objective(problem, free, eps_c, mu, True)
        round_trace.append(phi)
        converged = False
        for _ in range(opts.gd_max_iters):
            total_iters += 1
            if opts.time_invariant_gains:
                grad[:] = grad.mean(axis=0, keepdims=True)
            gnorm = float(np.abs(grad).max())
            if gnorm <= opts.gd_tol * (1.0 + abs(phi)):
                converged = True
                break
            step = 2.0 * alpha if alpha is not None else 1e-2 / (1.0 + gnorm)
            gsq = float((grad * grad).sum())
            accepted = False
            for _ in range(60):
                trial = free - step * grad
                trial_phi, _ = _augmented_objective(problem, trial, eps_c, mu, False)
                if trial_phi <= phi - 1e-4 * step * gsq:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                converged = True  # no descent direction at working precision
                break
            alpha = step
            free = trial
            prev_phi = phi
            phi, grad = _augmented_objective(problem, free, eps_c, mu, True)
            round_trace.append(phi)
            if abs(prev_phi - phi) <= 1e-13 * (1.0 + abs(phi)):
                converged = True
                break
        trace.append(round_trace)
    if opts.time_invariant_gains:
        free = np.repeat(free.mean(axis=0, keepdims=True), n - 1, axis=0)
    return _tie_schedule(free, n), {
        "phi_trace": trace, "iters": total_iters, "converged": converged}


# ---------------------------------------------------------------------------
# constraint evaluation

_VIOLATION_SURROGATE = float("inf")


def _link_with(template: LinkConfig, W: float) -> LinkConfig:
    return dataclasses.replace(template, W=W)


def _resource_state(problem: CodesignProblem, W_u: float, W_d: float,
                    eps_u: float, eps_d: float) -> dict:
    """Capacities, arrival rates, and delay bounds at one resource point.

    On a link-infeasible bandwidth the capacity entries become None and the
    caller substitutes the +inf residual surrogate.
    """
    out = {"link_infeasible": False}
    lam_u = uplink_arrival_rate(problem.traffic)
    try:
        C_u = effective_capacity(_link_with(problem.link_u, W_u), problem.rate_mode)
        C_d = effective_capacity(_link_with(problem.link_d, W_d), problem.rate_mode)
        lam_d = downlink_arrival_rate(problem.traffic, problem.link_u.theta,
                                      problem.link_d.theta,
                                      _link_with(problem.link_u, W_u), lam_u,
                                      problem.rate_mode)
        D_u = max_delay(eps_u, problem.link_u.theta, C_u)
        D_d = max_delay(eps_d, problem.link_d.theta, C_d)
    except LinkInfeasibleError:
        out.update(link_infeasible=True, C_u=None, C_d=None, lambda_u=lam_u,
                   lambda_d=None, D_u_max=None, D_d_max=None, D_c_max=None)
        return out
    out.update(C_u=C_u, C_d=C_d, lambda_u=lam_u, lambda_d=lam_d,
               D_u_max=D_u, D_d_max=D_d, D_c_max=D_u + D_d)
    return out


def _constraint_residuals(problem: CodesignProblem, W_u: float, W_d: float,
                          eps_u: float, eps_d: float,
                          gains: GainSchedule) -> tuple[dict, dict]:
    """Signed residuals (<= 0 satisfied) plus the derived-rate map."""
    eps_c = combined_loss(eps_u, eps_d)
    res = {}
    st = _resource_state(problem, W_u, W_d, eps_u, eps_d)
    if st["link_infeasible"]:
        res["capacity_u"] = _VIOLATION_SURROGATE
        res["capacity_d"] = _VIOLATION_SURROGATE
        res["delay"] = _VIOLATION_SURROGATE
        res["link_infeasible"] = 1.0
    else:
        res["capacity_u"] = st["lambda_u"] - st["C_u"]
        res["capacity_d"] = st["lambda_d"] - st["C_d"]
        res["delay"] = st["D_c_max"] - problem.D_0
        res["link_infeasible"] = 0.0
    states = rollout_expected(problem, gains, eps_c)
    worst = -math.inf
    worst_F2 = 0.0
    P = problem.weights.P
    A, B = problem.plant.A_tilde, problem.plant.B_tilde
    bPb = float(B @ P @ B)
    s2 = estimation_mse(problem.sensing)
    for t in range(problem.horizon):
        k = gains.gains[t]
        X = states[t]
        Z = A @ X
        Y = Z + float(k @ X) * B
        zPz = float(Z @ P @ Z)
        F1 = float(Y @ P @ Y) + bPb * float(k @ k) * s2 - zPz
        F2 = float(X @ P @ X) - zPz
        g = (1.0 - eps_c) * F1 - F2
        if g > worst:
            worst, worst_F2 = g, F2
    res["stability"] = worst
    res["stability_scale"] = 1.0 + abs(worst_F2)
    res["bandwidth"] = (W_u + W_d) - problem.W_0
    res["eps_box"] = max(-eps_c, eps_c - 1.0)
    return res, st


def _is_feasible(problem: CodesignProblem, res: dict, opts: SolverOptions) -> bool:
    lam_scale = uplink_arrival_rate(problem.traffic)
    tol = opts.feas_tol
    return (res["link_infeasible"] == 0.0
            and res["capacity_u"] <= tol * lam_scale
            and res["capacity_d"] <= tol * lam_scale
            and res["delay"] <= tol * problem.D_0
            and res["stability"] <= tol * res["stability_scale"]
            and res["bandwidth"] <= tol * problem.W_0
            and res["eps_box"] <= tol)


def _violation_score(problem: CodesignProblem, res: dict) -> float:
    """Scalar infeasibility measure used to rank candidates when nothing is
    feasible: max of scale-normalized positive residuals."""
    if res["link_infeasible"] != 0.0:
        return math.inf
    lam_scale = uplink_arrival_rate(problem.traffic)
    return max(res["capacity_u"] / lam_scale,
               res["capacity_d"] / lam_scale,
               res["delay"] / problem.D_0,
               res["stability"] / res["stability_scale"],
               res["bandwidth"] / problem.W_0,
               res["eps_box"],
               0.0)


def evaluate_constraints(problem: CodesignProblem,
                         candidate: CodesignSolution) -> dict:
    """Recompute the full signed-residual map for a candidate solution."""
    res, _ = _constraint_residuals(problem, candidate.W_u, candidate.W_d,
                                   candidate.eps_u, candidate.eps_d,
                                   candidate.gains)
    return res


# ---------------------------------------------------------------------------
# outer solver


@dataclass
class _Candidate:
    W_u: float
    eps_u: float
    eps_d: float
    cost: float
    feasible: bool
    score: float
    gains: GainSchedule
    inner: dict


def _evaluate_candidate(problem, opts, W_u, eps_u, eps_d, inner_cache,
                        warm) -> _Candidate:
    eps_c = combined_loss(eps_u, eps_d)
    key = round(math.log1p(eps_c) * 1e15)
    if key in inner_cache:
        gains, inner = inner_cache[key]
    else:
        gains, inner = optimize_gains(problem, eps_c, opts, init_free=warm)
        inner_cache[key] = (gains, inner)
    W_d = problem.W_0 - W_u
    res, _ = _constraint_residuals(problem, W_u, W_d, eps_u, eps_d, gains)
    states = rollout_expected(problem, gains, eps_c)
    commands = np.array([float(gains.gains[t] @ states[t])
                         for t in range(problem.horizon - 1)])
    cost = control_cost(states, commands, problem.weights)
    return _Candidate(W_u=W_u, eps_u=eps_u, eps_d=eps_d, cost=cost,
                      feasible=_is_feasible(problem, res, opts),
                      score=_violation_score(problem, res), gains=gains,
                      inner=inner)


def _better(a: _Candidate, b: _Candidate | None) -> bool:
    """Deterministic candidate order: feasibility first, then cost, then the
    smaller uplink share (frees downlink margin), then the eps pair."""
    if b is None:
        return True
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible:
        if abs(a.score - b.score) > 1e-12 * max(1.0, abs(b.score)):
            return a.score < b.score
        return (a.W_u, a.eps_u, a.eps_d) < (b.W_u, b.eps_u, b.eps_d)
    tie = 1e-9 * (1.0 + abs(b.cost))
    if a.cost < b.cost - tie:
        return True
    if a.cost > b.cost + tie:
        return False
    return (a.W_u, a.eps_u, a.eps_d) < (b.W_u, b.eps_u, b.eps_d)


def solve(problem: CodesignProblem, opts: SolverOptions = SolverOptions()
          ) -> CodesignSolution:
    """Two-level search for the resource split, loss targets, and gains.

    Grid stage couples eps_u = eps_d (one log grid) against the bandwidth
    split; refinement decouples them with coordinate descent. Returns the
    best candidate found; status is "infeasible" when no point satisfies
    every residual within feas_tol (the least-violating candidate is still
    returned so stress studies can simulate it).
    """
    w_grid = [problem.W_0 * j / (opts.n_w_grid + 1)
              for j in range(1, opts.n_w_grid + 1)]
    if opts.n_eps_grid == 1:
        eps_grid = [opts.eps_min]
    else:
        eps_grid = list(np.logspace(math.log10(opts.eps_min),
                                    math.log10(opts.eps_max), opts.n_eps_grid))
    inner_cache: dict = {}
    best: _Candidate | None = None
    for eps in eps_grid:
        for W_u in w_grid:
            cand = _evaluate_candidate(problem, opts, W_u, eps, eps,
                                       inner_cache, None)
            if _better(cand, best):
                best = cand

    # coordinate-descent refinement around the incumbent
    eps_step = (opts.eps_max / opts.eps_min) ** (1.0 / max(1, opts.n_eps_grid - 1))
    w_step = problem.W_0 / (opts.n_w_grid + 1)
    w_lo, w_hi = 1e-9 * problem.W_0, (1.0 - 1e-9) * problem.W_0
    for _ in range(opts.refine_iters):
        improved = False
        for coord in ("eps_u", "eps_d", "W_u"):
            for direction in (-1, 1):
                if coord == "W_u":
                    W_u = min(max(best.W_u + direction * w_step, w_lo), w_hi)
                    eps_u, eps_d = best.eps_u, best.eps_d
                    if W_u == best.W_u:
                        continue
                else:
                    factor = eps_step if direction > 0 else 1.0 / eps_step
                    eps_u, eps_d = best.eps_u, best.eps_d
                    if coord == "eps_u":
                        eps_u = min(max(eps_u * factor, opts.eps_min), opts.eps_max)
                        if eps_u == best.eps_u:
                            continue
                    else:
                        eps_d = min(max(eps_d * factor, opts.eps_min), opts.eps_max)
                        if eps_d == best.eps_d:
                            continue
                    W_u = best.W_u
                warm = best.gains.gains[:-1] if problem.horizon > 1 else None
                cand = _evaluate_candidate(problem, opts, W_u, eps_u, eps_d,
                                           inner_cache, warm)
                if _better(cand, best):
                    best = cand
                    improved = True
        if not improved:
            eps_step = math.sqrt(eps_step)
            w_step *= 0.5
            if eps_step < 1.0 + 1e-6 and w_step < 1e-6 * problem.W_0:
                break

    W_d = problem.W_0 - best.W_u
    res, st = _constraint_residuals(problem, best.W_u, W_d, best.eps_u,
                                    best.eps_d, best.gains)
    eps_c = combined_loss(best.eps_u, best.eps_d)
    derived = LoopQoS(D_c_max=st["D_c_max"] if not st["link_infeasible"] else 0.0,
                      eps_c=eps_c)
    if best.feasible:
        status = STATUS_CONVERGED if best.inner["converged"] else STATUS_ITERATION_LIMIT
    else:
        status = STATUS_INFEASIBLE
    info = {k: st[k] for k in ("C_u", "C_d", "lambda_u", "lambda_d",
                               "D_u_max", "D_d_max", "D_c_max")}
    info["link_infeasible"] = bool(st["link_infeasible"])
    info["inner_iters"] = best.inner["iters"]
    return CodesignSolution(gains=best.gains, W_u=best.W_u, W_d=W_d,
                            eps_u=best.eps_u, eps_d=best.eps_d, derived=derived,
                            cost_J=best.cost, residuals=res, status=status,
                            info=info)
