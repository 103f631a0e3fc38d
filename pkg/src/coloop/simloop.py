"""Monte Carlo closed-loop replay of a solved design.

Per loop batch: sample and fuse sensor observations, predict the next
horizon of states from the fused estimate, compute the command sequence
through the gain schedule, then deliver it across the network: one cycle
delay drawn from the exponential tail law (censored at D_c_max, the excess
mass being the loss budget), commands before the delay offset never arrive,
and each delivered command survives an independent Bernoulli draw with
survival probability 1 - eps_c. Lost or missing slots apply no control.

The batch prediction accounts for the transport step: whenever eps_c > 0
the delay is at least one step almost surely, so the predicted rollout
leaves the first slot uncontrolled. Commands are generated for every slot
anyway (the device indexes the batch by its measured delay). With eps_c = 0
the delay is exactly zero and the prediction controls every slot, which
makes the noiseless lossless trajectory reproduce the expected rollout
bit for bit.

Sensing noise, command survival, and delay draws come from three
independent child streams of the run seed, so changing the noise scale
never shifts the loss pattern and vice versa.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .codesign import (CodesignProblem, CodesignSolution, SolverOptions,
                       STATUS_CONVERGED, solve)
from .estimation import STATE_DIM, fuse, sample_observations
from .plant import GainSchedule

SWEEP_PARAMETERS = ("k_s", "W_0", "D_0")

TRAJECTORY_COLUMNS = ("run_id", "t_index", "time_s", "delta_m", "v_mps",
                      "a_mps2", "delta_hat_m", "command", "eta",
                      "delay_steps", "cum_cost")

SUMMARY_COLUMNS = ("parameter", "value", "n_runs", "status", "feasible",
                   "eps_c", "W_u_hz", "W_d_hz", "eps_u", "eps_d", "D_c_max_s",
                   "cost_J", "settled_fraction", "settle_time_mean_s",
                   "settle_time_ci95_s", "overshoot_mean_m", "overshoot_max_m",
                   "jitter_rms_m", "loss_rate", "loss_attempts",
                   "delta_final_abs_mean_m")


@dataclass(frozen=True)
class SimConfig:
    n_runs: int
    sim_horizon: int
    seed: int
    settle_band: float = 2.0
    replan_every: int | None = None  # None: one plan per optimizer horizon

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be >= 1, got {self.n_runs}")
        if self.sim_horizon < 1:
            raise ValueError(f"sim_horizon must be >= 1, got {self.sim_horizon}")
        if self.settle_band <= 0:
            raise ValueError(f"settle_band must be > 0, got {self.settle_band}")
        if self.replan_every is not None and self.replan_every < 1:
            raise ValueError("replan_every must be >= 1 when given")


@dataclass
class TrajectoryRecord:
    """One run, one row per simulated step (state at the step start).

    commands holds NaN where no command was applied; eta is 1/0 for a
    delivered/lost attempt and -1 where no delivery was attempted (slot
    before the delay offset, or no command shipped for the slot).
    """

    run_id: int
    states: np.ndarray       # (H, 3)
    estimates: np.ndarray    # (H, 3) batch prediction for each slot
    commands: np.ndarray     # (H,)
    eta: np.ndarray          # (H,) int8
    delay_steps: np.ndarray  # (H,) int16, current batch's delay
    cum_cost: np.ndarray     # (H,)


@dataclass
class SweepSummary:
    parameter: str
    values: list
    rows: list  # one dict per value, SUMMARY_COLUMNS keys


def _draw_delay_steps(rng, eps_c: float, D_c_max: float, T_d: float) -> int:
    """Delay d in steps: exponential tail with P(D > D_c_max) = eps_c,
    censored at D_c_max (the excess is the loss budget), ceiling-converted.
    eps_c = 0 collapses to zero delay; the draw is skipped entirely so the
    stream stays aligned across loss regimes of other batches."""
    if eps_c <= 0.0:
        return 0
    if D_c_max <= 0.0:
        raise ValueError("D_c_max must be > 0 to draw delays with eps_c > 0")
    if eps_c >= 1.0:
        return max(1, math.ceil(D_c_max / T_d))
    mean = D_c_max / math.log(1.0 / eps_c)
    D = min(float(rng.exponential(mean)), D_c_max)
    return max(1, math.ceil(D / T_d))


def _plan_batch(problem: CodesignProblem, gains: GainSchedule,
                X_hat: np.ndarray, eps_c: float):
    """Commands for every slot of one batch plus the predicted states they
    were computed from. Slots below the a.s. minimum delay are predicted
    uncontrolled; see the module docstring."""
    n = problem.horizon
    A, B = problem.plant.A_tilde, problem.plant.B_tilde
    d_min = 0 if eps_c <= 0.0 else 1
    c = 1.0 - eps_c
    pred = np.empty((n, STATE_DIM))
    pred[0] = X_hat
    cmds = np.empty(n)
    for j in range(n):
        cmds[j] = float(gains.gains[j] @ pred[j])
        if j + 1 < n:
            c_eff = 0.0 if j < d_min else c
            pred[j + 1] = A @ pred[j] + c_eff * B * cmds[j]
    return cmds, pred


def run_closed_loop(problem: CodesignProblem, solution: CodesignSolution,
                    sim: SimConfig, run_seed: int,
                    allow_unconverged: bool = False) -> TrajectoryRecord:
    """Simulate one run; deterministic in (problem, solution, sim, run_seed)."""
    if solution.status != STATUS_CONVERGED and not allow_unconverged:
        raise ValueError(
            f"solution status is {solution.status!r}; pass "
            "allow_unconverged=True to simulate it anyway")
    if solution.gains.horizon != problem.horizon:
        raise ValueError("solution gain schedule does not match problem horizon")
    A, B = problem.plant.A_tilde, problem.plant.B_tilde
    P, R_w = problem.weights.P, problem.weights.R_w
    T_d = problem.plant.T_d
    n = problem.horizon
    eps_c = solution.derived.eps_c
    D_c_max = solution.derived.D_c_max
    replan = sim.replan_every if sim.replan_every is not None else n
    H = sim.sim_horizon

    base = np.random.SeedSequence(entropy=int(run_seed))
    obs_ss, eta_ss, delay_ss = base.spawn(3)
    obs_rng = np.random.default_rng(obs_ss)
    eta_rng = np.random.default_rng(eta_ss)
    delay_rng = np.random.default_rng(delay_ss)

    states = np.empty((H, STATE_DIM))
    estimates = np.empty((H, STATE_DIM))
    commands = np.full(H, np.nan)
    eta_col = np.full(H, -1, dtype=np.int8)
    delay_col = np.zeros(H, dtype=np.int16)
    cum = np.empty(H)

    X = problem.X_ini.copy()
    running = 0.0
    cmds = pred = None
    eta_batch = None
    d = 0
    est_tail = None
    for t in range(H):
        off = t % replan
        if off == 0:
            obs = sample_observations(X, problem.sensing, obs_rng)
            X_hat = fuse(obs)
            eta_batch = (eta_rng.random(n) < (1.0 - eps_c)).astype(np.int8)
            d = _draw_delay_steps(delay_rng, eps_c, D_c_max, T_d)
            cmds, pred = _plan_batch(problem, solution.gains, X_hat, eps_c)
            est_tail = pred[n - 1]
        if off < n:
            est_row = pred[off]
        else:  # replan cadence longer than the shipped horizon: drift forecast
            est_tail = A @ est_tail
            est_row = est_tail
        states[t] = X
        estimates[t] = est_row
        delay_col[t] = d
        u = 0.0
        if d <= off < n:
            eta_col[t] = eta_batch[off]
            if eta_batch[off] == 1:
                u = cmds[off]
                commands[t] = u
                X = A @ X + B * u
            else:
                X = A @ X
        else:
            X = A @ X
        running += float(states[t] @ P @ states[t]) + R_w * u * u
        cum[t] = running
    return TrajectoryRecord(run_id=0, states=states, estimates=estimates,
                            commands=commands, eta=eta_col,
                            delay_steps=delay_col, cum_cost=cum)


def _settle_index(delta: np.ndarray, band: float):
    """First index from which |delta| stays within the band; None if the
    trajectory is still outside at the window end."""
    outside = np.abs(delta) > band
    idx = np.flatnonzero(outside)
    if idx.size == 0:
        return 0
    if idx[-1] == delta.size - 1:
        return None
    return int(idx[-1]) + 1


def monte_carlo(problem: CodesignProblem, solution: CodesignSolution,
                sim: SimConfig, jobs: int = 1,
                allow_unconverged: bool = False):
    """n_runs independent replays plus one aggregate summary row.

    Run seeds are the leading words of the master seed's stream, so growing
    n_runs reproduces the existing runs unchanged. Aggregation order is by
    run index whatever the job count.
    """
    words = np.random.SeedSequence(sim.seed).generate_state(sim.n_runs,
                                                            np.uint64)

    def one(i: int) -> TrajectoryRecord:
        rec = run_closed_loop(problem, solution, sim, int(words[i]),
                              allow_unconverged=allow_unconverged)
        rec.run_id = i
        return rec

    if jobs > 1 and sim.n_runs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, range(sim.n_runs)))
    else:
        records = [one(i) for i in range(sim.n_runs)]

    T_d = problem.plant.T_d
    settle_times = []
    overshoots = []
    jitter_sq_sum = 0.0
    jitter_count = 0
    lost = 0
    attempted = 0
    final_abs = []
    for rec in records:
        delta = rec.states[:, 0]
        s_idx = _settle_index(delta, sim.settle_band)
        if s_idx is not None:
            settle_times.append(s_idx * T_d)
            tail = delta[s_idx:]
            jitter_sq_sum += float(tail @ tail)
            jitter_count += tail.size
        overshoots.append(max(0.0, float(-delta.min())))
        att = rec.eta >= 0
        attempted += int(att.sum())
        lost += int((rec.eta == 0).sum())
        final_abs.append(abs(float(delta[-1])))
    k = len(settle_times)
    mean_settle = float(np.mean(settle_times)) if k else math.nan
    if k > 1:
        ci = 1.96 * float(np.std(settle_times, ddof=1)) / math.sqrt(k)
    else:
        ci = 0.0 if k == 1 else math.nan
    stats = {
        "n_runs": sim.n_runs,
        "status": solution.status,
        "feasible": solution.status == STATUS_CONVERGED,
        "eps_c": solution.derived.eps_c,
        "W_u_hz": solution.W_u,
        "W_d_hz": solution.W_d,
        "eps_u": solution.eps_u,
        "eps_d": solution.eps_d,
        "D_c_max_s": solution.derived.D_c_max,
        "cost_J": solution.cost_J,
        "settled_fraction": k / sim.n_runs,
        "settle_time_mean_s": mean_settle,
        "settle_time_ci95_s": ci,
        "overshoot_mean_m": float(np.mean(overshoots)),
        "overshoot_max_m": float(np.max(overshoots)),
        "jitter_rms_m": math.sqrt(jitter_sq_sum / jitter_count)
                        if jitter_count else math.nan,
        "loss_rate": lost / attempted if attempted else math.nan,
        "loss_attempts": attempted,
        "delta_final_abs_mean_m": float(np.mean(final_abs)),
    }
    return records, stats


def with_parameter(problem: CodesignProblem, name: str, value) -> CodesignProblem:
    """Rebuild the problem with one swept parameter changed."""
    if name == "k_s":
        k = int(value)
        if k != value or k < 1:
            raise ValueError(f"k_s must be a positive integer, got {value}")
        return dataclasses.replace(
            problem,
            traffic=dataclasses.replace(problem.traffic, k_s=k),
            sensing=dataclasses.replace(problem.sensing, k_s=k))
    if name == "W_0":
        return dataclasses.replace(problem, W_0=float(value))
    if name == "D_0":
        return dataclasses.replace(problem, D_0=float(value))
    raise ValueError(
        f"unknown sweep parameter {name!r}; valid: {', '.join(SWEEP_PARAMETERS)}")


def sweep(problem: CodesignProblem, parameter: str, values, sim: SimConfig,
          opts: SolverOptions = SolverOptions(), jobs: int = 1,
          on_value=None) -> SweepSummary:
    """Solve + Monte Carlo per value; one summary row each.

    Infeasible values are still simulated (the solver returns its least
    violating candidate) so stress regimes show their trajectories; the row
    keeps feasible=False. A value whose candidate cannot transmit at all
    (infeasible link) gets a row with empty simulation statistics.
    on_value(value, solution, records) is called per value as results are
    ready, letting callers stream trajectories to disk.
    """
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for value in values:
        prob_v = with_parameter(problem, parameter, value)
        solution = solve(prob_v, opts)
        if solution.info.get("link_infeasible"):
            records = []
            stats = {c: math.nan for c in SUMMARY_COLUMNS[2:]}
            stats.update(n_runs=0, status=solution.status, feasible=False,
                         eps_c=solution.derived.eps_c, W_u_hz=solution.W_u,
                         W_d_hz=solution.W_d, eps_u=solution.eps_u,
                         eps_d=solution.eps_d,
                         D_c_max_s=solution.derived.D_c_max,
                         cost_J=solution.cost_J)
        else:
            records, stats = monte_carlo(prob_v, solution, sim, jobs=jobs,
                                         allow_unconverged=True)
        row = {"parameter": parameter, "value": value}
        row.update(stats)
        rows.append(row)
        if on_value is not None:
            on_value(value, solution, records)
    return SweepSummary(parameter=parameter, values=values, rows=rows)


# ---------------------------------------------------------------------------
# CSV emission (RFC 4180: CRLF, header row, minimal quoting)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        xf = float(x)
        return "" if math.isnan(xf) else repr(xf)
    return str(x)


def write_trajectories(path, records, T_d: float) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for rec in records:
            H = rec.states.shape[0]
            for t in range(H):
                eta = rec.eta[t]
                w.writerow((
                    rec.run_id, t, _fmt(t * T_d),
                    _fmt(rec.states[t, 0]), _fmt(rec.states[t, 1]),
                    _fmt(rec.states[t, 2]), _fmt(rec.estimates[t, 0]),
                    _fmt(float(rec.commands[t])),
                    "" if eta < 0 else str(int(eta)),
                    int(rec.delay_steps[t]), _fmt(rec.cum_cost[t]),
                ))


def write_summary(path, summary: SweepSummary) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in summary.rows:
            w.writerow(tuple(_fmt(row[c]) for c in SUMMARY_COLUMNS))
