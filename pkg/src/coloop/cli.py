"""Command line: solve | simulate | sweep | validate.

Every command writes a manifest into the output directory before any
computation starts; the manifest carries the fully resolved parameter set
and the effective master seed, and can itself be passed back as --config
to reproduce the outputs byte for byte.

Exit codes: 0 success (an infeasible solve is a result, not a failure),
1 usage, 2 validation (bad config, bad solution file, failed validate
checks), 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .codesign import (CodesignProblem, CodesignSolution, cost_and_gradient,
                       solve, STATUS_CONVERGED)
from .config import (ConfigError, build_problem, build_sim,
                     build_solver_options, load_config)
from .estimation import STATE_DIM
from .plant import (GainSchedule, build_plant, default_stability_weights,
                    lyapunov_terms)
from .qos import (LoopQoS, downlink_arrival_rate, effective_capacity,
                  max_delay, uplink_arrival_rate)
from .simloop import (SWEEP_PARAMETERS, SweepSummary, monte_carlo, sweep,
                      write_summary, write_trajectories)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad arguments; remap to the usage code
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunManifest:
    """Everything needed to reproduce one invocation byte for byte."""

    command: str
    config_path: str
    resolved: dict
    tool_version: str
    seed: int
    out_dir: str
    solution_path: str | None = None
    sweep: dict | None = None


def write_manifest(path, manifest: RunManifest) -> None:
    doc = dataclasses.asdict(manifest)
    doc = {k: v for k, v in doc.items() if v is not None}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# solution files


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def solution_to_dict(sol: CodesignSolution) -> dict:
    return {
        "tool_version": __version__,
        "status": sol.status,
        "W_u": sol.W_u,
        "W_d": sol.W_d,
        "eps_u": sol.eps_u,
        "eps_d": sol.eps_d,
        "derived": {"D_c_max": sol.derived.D_c_max, "eps_c": sol.derived.eps_c},
        "cost_J": sol.cost_J,
        "gains": _jsonable(sol.gains.gains),
        "residuals": _jsonable(sol.residuals),
        "info": _jsonable(sol.info),
    }


def write_solution(path, sol: CodesignSolution) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(solution_to_dict(sol), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_solution(path, problem: CodesignProblem) -> CodesignSolution:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("<solution>", f"no such solution file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<solution>",
                          f"solution file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<solution>", "solution file must hold a JSON object")
    version = doc.get("tool_version")
    if version != __version__:
        raise ConfigError("<solution>",
                          f"solution was written by tool version {version!r}, "
                          f"this is {__version__}; re-run solve")
    try:
        gains = GainSchedule(gains=np.array(doc["gains"], dtype=float),
                             horizon=len(doc["gains"]))
        derived = LoopQoS(D_c_max=float(doc["derived"]["D_c_max"]),
                          eps_c=float(doc["derived"]["eps_c"]))
        sol = CodesignSolution(
            gains=gains, W_u=float(doc["W_u"]), W_d=float(doc["W_d"]),
            eps_u=float(doc["eps_u"]), eps_d=float(doc["eps_d"]),
            derived=derived, cost_J=float(doc["cost_J"]),
            residuals=doc.get("residuals", {}), status=str(doc["status"]),
            info=doc.get("info", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("<solution>",
                          f"solution file is malformed: {exc}") from None
    if sol.gains.horizon != problem.horizon:
        raise ConfigError("<solution>",
                          f"solution has {sol.gains.horizon} gain rows but the "
                          f"config sets N = {problem.horizon}")
    return sol


# ---------------------------------------------------------------------------
# commands


def _prepare_out(args, resolved, command, solution_path=None, sweep_info=None):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.seed is not None:
        resolved["sim"]["seed"] = args.seed
    manifest = RunManifest(command=command, config_path=str(args.config),
                           resolved=resolved, tool_version=__version__,
                           seed=resolved["sim"]["seed"], out_dir=str(out),
                           solution_path=solution_path, sweep=sweep_info)
    write_manifest(out / "manifest.json", manifest)
    return out


def _print_solution(sol: CodesignSolution) -> None:
    print(f"status   {sol.status}")
    print(f"cost J   {sol.cost_J:.6f}")
    print(f"W_u      {sol.W_u:.3f} Hz    W_d {sol.W_d:.3f} Hz")
    print(f"eps_u    {sol.eps_u:.3e}    eps_d {sol.eps_d:.3e}    "
          f"eps_c {sol.derived.eps_c:.3e}")
    print(f"D_c_max  {sol.derived.D_c_max:.6f} s")
    print("residuals (<= 0 satisfied):")
    for name, value in sorted(sol.residuals.items()):
        if isinstance(value, (int, float, np.floating)):
            print(f"  {name:18s} {float(value): .6e}")


def cmd_solve(args) -> int:
    resolved = load_config(args.config)
    out = _prepare_out(args, resolved, "solve")
    problem = build_problem(resolved)
    opts = build_solver_options(resolved)
    if resolved["solver"]["gradient_check"]:
        worst = _gradient_check(problem)
        if worst > 1e-4:
            raise RuntimeError(
                f"gradient self-check failed: relative error {worst:.3e}")
        print(f"gradient self-check ok (max relative error {worst:.3e})")
    sol = solve(problem, opts)
    write_solution(out / "solution.json", sol)
    _print_solution(sol)
    return EXIT_OK


def cmd_simulate(args) -> int:
    resolved = load_config(args.config)
    problem = build_problem(resolved)
    sol = read_solution(args.solution, problem)
    out = _prepare_out(args, resolved, "simulate",
                       solution_path=str(args.solution))
    sim = build_sim(resolved)
    if sol.status != STATUS_CONVERGED:
        print(f"warning: simulating a solution with status {sol.status!r}",
              file=sys.stderr)
    records, stats = monte_carlo(problem, sol, sim, jobs=args.jobs,
                                 allow_unconverged=True)
    write_trajectories(out / "trajectories.csv", records, problem.plant.T_d)
    row = {"parameter": "", "value": ""}
    row.update(stats)
    write_summary(out / "summary.csv", SweepSummary(parameter="", values=[],
                                                    rows=[row]))
    print(f"{sim.n_runs} runs, {sim.sim_horizon} steps each")
    print(f"settled {stats['settled_fraction'] * 100:.0f}%  "
          f"settle {stats['settle_time_mean_s']:.3f} s  "
          f"overshoot {stats['overshoot_mean_m']:.3f} m  "
          f"jitter {stats['jitter_rms_m']:.3f} m  "
          f"loss {stats['loss_rate']:.3e}")
    return EXIT_OK


def _parse_values(text: str):
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            v = float(token)
        except ValueError:
            raise _UsageError(f"--values: {token!r} is not a number") from None
        values.append(int(v) if v == int(v) else v)
    if not values:
        raise _UsageError("--values: need at least one value")
    return values


def cmd_sweep(args) -> int:
    resolved = load_config(args.config)
    values = _parse_values(args.values)
    out = _prepare_out(args, resolved, "sweep",
                       sweep_info={"parameter": args.param, "values": values})
    problem = build_problem(resolved)
    opts = build_solver_options(resolved)
    sim = build_sim(resolved)
    T_d = problem.plant.T_d
    index = {"i": 0}

    def on_value(value, solution, records):
        vdir = out / f"value_{index['i']:03d}"
        index["i"] += 1
        vdir.mkdir(exist_ok=True)
        write_solution(vdir / "solution.json", solution)
        write_trajectories(vdir / "trajectories.csv", records, T_d)
        print(f"{args.param}={value:g}: status={solution.status} "
              f"eps_c={solution.derived.eps_c:.3e} J={solution.cost_J:.3f}")

    summary = sweep(problem, args.param, values, sim, opts=opts,
                    jobs=args.jobs, on_value=on_value)
    write_summary(out / "summary.csv", summary)
    print(f"wrote {len(summary.rows)} summary rows to {out / 'summary.csv'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate: invariant checks on the configured problem


def _gradient_check(problem: CodesignProblem, scale: float = 0.05) -> float:
    """Max relative error of the analytic cost gradient against central
    finite differences at a deterministic moderate-magnitude point."""
    rng = np.random.default_rng(411)
    n_free = problem.horizon - 1
    free = scale * rng.standard_normal((n_free, STATE_DIM))
    eps_c = 0.01
    J0, grad = cost_and_gradient(problem, free, eps_c)
    h = 1e-6
    worst = 0.0
    for t in range(n_free):
        for j in range(STATE_DIM):
            step = h * max(1.0, abs(free[t, j]))
            bumped = free.copy()
            bumped[t, j] += step
            Jp, _ = cost_and_gradient(problem, bumped, eps_c)
            bumped[t, j] -= 2 * step
            Jm, _ = cost_and_gradient(problem, bumped, eps_c)
            fd = (Jp - Jm) / (2 * step)
            denom = max(abs(fd), abs(grad[t, j]), 1e-12 * max(1.0, abs(J0)))
            worst = max(worst, abs(fd - grad[t, j]) / denom)
    return worst


def _run_checks(resolved: dict):
    checks = []

    def record(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        checks.append({"name": name, "passed": bool(ok), "detail": detail})
        return checks[-1]["passed"]

    p = resolved["problem"]

    def check_psd():
        plant = build_plant(varsigma=p["varsigma"], T_d=p["T_d"])
        if p["weights"] == "auto":
            w = default_stability_weights(plant)
            P, S = w.P, w.S
        else:
            P = np.array(p["weights"]["P"], dtype=float)
            S = np.array(p["weights"]["S"], dtype=float)
        details = []
        ok = True
        for name, M in (("P", P), ("S", S)):
            sym = float(np.max(np.abs(M - M.T)))
            lo = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
            details.append(f"{name}: min eig {lo:.3e}, asym {sym:.1e}")
            if lo < -1e-9 * max(1.0, float(np.abs(M).max())) or sym > 1e-9:
                ok = False
        return ok, "; ".join(details)

    record("weights_psd", check_psd)

    holder = {}

    def check_constructs():
        holder["problem"] = build_problem(resolved)
        return True, "problem constructed"

    if not record("problem_constructs", check_constructs):
        for name in ("delay_bound_round_trip", "departure_rate_continuity",
                     "expected_decrease_identity", "gradient_finite_diff"):
            checks.append({"name": name, "passed": False,
                           "detail": "skipped: problem did not construct"})
        return checks
    problem = holder["problem"]

    def check_delay_bound():
        link = dataclasses.replace(problem.link_u, W=problem.W_0 / 2)
        C = effective_capacity(link, mode=problem.rate_mode)
        worst = 0.0
        for eps in np.geomspace(1e-6, 0.4, 40):
            D = max_delay(float(eps), link.theta, C)
            worst = max(worst, abs(math.exp(-link.theta * C * D) - eps))
        ok = worst <= 1e-12
        return ok, f"max |exp(-theta C D) - eps| = {worst:.3e}"

    record("delay_bound_round_trip", check_delay_bound)

    def check_departure_rate():
        link_u = dataclasses.replace(problem.link_u, W=problem.W_0 / 2)
        lam_u = uplink_arrival_rate(problem.traffic)
        th_u = problem.link_u.theta
        base = downlink_arrival_rate(problem.traffic, th_u, th_u, link_u,
                                     lam_u, mode=problem.rate_mode)
        bump = downlink_arrival_rate(problem.traffic, th_u, th_u * (1 + 1e-9),
                                     link_u, lam_u, mode=problem.rate_mode)
        rel = abs(bump - base) / abs(base)
        return rel <= 1e-6, f"relative jump at theta_d = theta_u: {rel:.3e}"

    record("departure_rate_continuity", check_departure_rate)

    def check_expected_decrease():
        rng = np.random.default_rng(202)
        plant, weights = problem.plant, problem.weights
        sigma = max(problem.sensing.sigma, 0.5)  # noiseless configs still exercise the noise term
        k_s = problem.sensing.k_s
        n_mc = 20000
        worst_z = 0.0
        for _ in range(10):
            X = rng.normal(0, 50, STATE_DIM)
            K = rng.normal(0, 0.5, STATE_DIM)
            eps_c = float(rng.uniform(0, 1))
            F1, F2 = lyapunov_terms(plant, weights.P, X, K, sigma, k_s)
            closed = (1 - eps_c) * F1 - F2
            # Monte Carlo of E[V(X+) - V(X)] under estimate noise + Bernoulli delivery
            noise = rng.normal(0, sigma / math.sqrt(k_s), (n_mc, STATE_DIM))
            eta = rng.random(n_mc) < (1 - eps_c)
            u = (X[None, :] + noise) @ K
            X_next = (plant.A_tilde @ X)[None, :] \
                + np.where(eta, u, 0.0)[:, None] * plant.B_tilde[None, :]
            V_next = np.einsum("ij,jk,ik->i", X_next, weights.P, X_next)
            V_now = float(X @ weights.P @ X)
            samples = V_next - V_now
            se = float(samples.std(ddof=1)) / math.sqrt(n_mc)
            z = abs(float(samples.mean()) - closed) / max(se, 1e-300)
            worst_z = max(worst_z, z)
        return worst_z <= 3.0, f"max |z| over 10 instances = {worst_z:.2f}"

    record("expected_decrease_identity", check_expected_decrease)

    def check_gradient():
        worst = _gradient_check(problem)
        return worst <= 1e-4, f"max relative error {worst:.3e}"

    record("gradient_finite_diff", check_gradient)
    return checks


def cmd_validate(args) -> int:
    resolved = load_config(args.config)
    checks = _run_checks(resolved)
    all_ok = all(c["passed"] for c in checks)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "validate.json", "w", encoding="utf-8") as fh:
            json.dump({"tool_version": __version__, "passed": all_ok,
                       "checks": checks}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK if all_ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coloop",
                     description="Co-design solver and closed-loop simulator "
                                 "for a wireless braking control system")
    parser.add_argument("--version", action="version",
                        version=f"coloop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    def common(sp, out_required=True):
        sp.add_argument("--config", required=True, help="TOML config file "
                        "(or a manifest JSON from a previous run)")
        sp.add_argument("--out", required=out_required,
                        help="output directory (created if missing)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the master seed from the config")
        sp.add_argument("--jobs", type=int, default=1,
                        help="max concurrent Monte Carlo runs")

    sp = sub.add_parser("solve", help="solve the co-design problem")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate",
                        help="Monte Carlo replay of a solved design")
    sp.add_argument("solution", help="solution JSON written by solve")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="solve + simulate across one parameter")
    common(sp)
    sp.add_argument("--param", required=True, choices=SWEEP_PARAMETERS,
                    help="parameter to sweep")
    sp.add_argument("--values", required=True,
                    help="comma-separated values, e.g. 2,6,10,14,17")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("validate",
                        help="run the invariant checks on a configured problem")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=None,
                    help="directory for the machine-readable report")
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
