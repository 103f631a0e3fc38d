"""Config files: TOML keys mirroring the model symbols, with defaults.

Every parameter has a baseline default except k_s, which callers must set
explicitly (the baseline parameter table leaves it open and the experiments
sweep it). A config file containing only `k_s = 10` therefore runs the
baseline scenario. Keys with ambiguous units carry the unit in the name
(W_0_hz, D_0_s); SNRs are linear unless snr_unit = "dB".

`weights = "auto"` derives the certificate weights from the plant (see
plant.default_stability_weights); an inline table {P, R_w, S} supplies them
explicitly. Shape and type problems are config errors; whether an explicit
P actually certifies anything is a semantic question left to `validate`.

load_config also accepts a manifest JSON written by the CLI, reusing its
fully resolved parameter set so reruns reproduce outputs byte for byte.
"""

from __future__ import annotations

import json

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

import numpy as np

from .codesign import CodesignProblem, RATE_MODES, RATE_MODE_NORMALIZED, SolverOptions
from .estimation import SensingConfig
from .phy import LinkConfig, snr_db_to_linear
from .plant import StabilityWeights, build_plant, default_stability_weights
from .qos import TrafficModel
from .simloop import SimConfig


class ConfigError(ValueError):
    """A config value failed validation; .field names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


_PROBLEM_DEFAULTS = {
    "beta": 1000.0,      # sensing payload per sample (bit)
    "gamma": 20.0,       # command payload (bit)
    "T_s": 0.05,         # sampling period (s)
    "T_d": 0.05,         # control/discretization step (s)
    "sigma": 1.5,        # sensing noise std dev (m)
    "snr_u": 20.0,
    "snr_d": 30.0,
    "snr_unit": "linear",
    "e_u": 0.001,        # uplink decoding error probability
    "e_d": 0.002,
    "theta_u": 0.001,    # QoS exponents
    "theta_d": 0.002,
    "varsigma": 0.125,   # engine time constant (s)
    "N": 10,             # commands per loop = optimizer horizon
    "L": 200,            # blocklength (symbols)
    "W_0_hz": 1.5e6,
    "D_0_s": 0.15,
    "X_ini": [100.0, 0.0, 0.0],
    "weights": "auto",
    "rate_mode": RATE_MODE_NORMALIZED,
}

_SOLVER_DEFAULTS = {
    "n_w_grid": 16,
    "n_eps_grid": 16,
    "eps_min": 1e-6,
    "eps_max": 0.5,
    "refine_iters": 50,
    "penalty_rounds": 4,
    "penalty_init": 10.0,
    "penalty_growth": 10.0,
    "gd_max_iters": 200,
    "gd_tol": 1e-6,
    "feas_tol": 1e-6,
    "time_invariant_gains": False,
    "gradient_check": False,
}

_SIM_DEFAULTS = {
    "n_runs": 100,
    "sim_horizon": 240,
    "seed": 20250815,
    "settle_band": 2.0,
    # replan_every omitted: one plan per optimizer horizon
}


def _require_number(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(_qual(section, key), f"expected a number, got {value!r}")
    return float(value)


def _require_int(section: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(_qual(section, key), f"expected an integer, got {value!r}")
    return value


def _require_bool(section: str, key: str, value) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(_qual(section, key), f"expected true/false, got {value!r}")
    return value


def _qual(section: str, key: str) -> str:
    return f"{section}.{key}" if section else key


def _positive(section: str, key: str, value) -> float:
    v = _require_number(section, key, value)
    if v <= 0:
        raise ConfigError(_qual(section, key), f"must be > 0, got {value}")
    return v


def _matrix3(field: str, value) -> list:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(field, "expected a 3x3 matrix of numbers") from None
    if arr.shape != (3, 3):
        raise ConfigError(field, f"expected a 3x3 matrix, got shape {arr.shape}")
    return arr.tolist()


def resolve(raw: dict) -> dict:
    """Fill defaults and validate shapes/types/ranges.

    Returns {"problem": {...}, "solver": {...}, "sim": {...}} with every key
    present (replan_every normalized to 0 meaning one-plan-per-horizon).
    Raises ConfigError naming the offending field.
    """
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config root must be a table")
    raw = dict(raw)
    solver_raw = raw.pop("solver", {})
    sim_raw = raw.pop("sim", {})
    if not isinstance(solver_raw, dict):
        raise ConfigError("solver", "must be a table")
    if not isinstance(sim_raw, dict):
        raise ConfigError("sim", "must be a table")

    unknown = set(raw) - set(_PROBLEM_DEFAULTS) - {"k_s"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    unknown = set(solver_raw) - set(_SOLVER_DEFAULTS)
    if unknown:
        raise ConfigError(_qual("solver", sorted(unknown)[0]), "unknown key")
    unknown = set(sim_raw) - set(_SIM_DEFAULTS) - {"replan_every"}
    if unknown:
        raise ConfigError(_qual("sim", sorted(unknown)[0]), "unknown key")

    if "k_s" not in raw:
        raise ConfigError("k_s", "required (number of sensing samples; the "
                          "baseline table leaves it open, experiments sweep it)")

    p = dict(_PROBLEM_DEFAULTS)
    p.update(raw)
    p["k_s"] = _require_int("", "k_s", p["k_s"])
    if p["k_s"] < 1:
        raise ConfigError("k_s", f"must be >= 1, got {p['k_s']}")
    for key in ("beta", "gamma", "T_s", "T_d", "e_u", "e_d",
                "theta_u", "theta_d", "W_0_hz", "D_0_s"):
        p[key] = _positive("", key, p[key])
    for key in ("e_u", "e_d"):
        if p[key] >= 1:
            raise ConfigError(key, f"must lie in (0, 1), got {p[key]}")
    p["sigma"] = _require_number("", "sigma", p["sigma"])
    if p["sigma"] < 0:
        raise ConfigError("sigma", f"must be >= 0, got {p['sigma']}")
    p["varsigma"] = _require_number("", "varsigma", p["varsigma"])
    if p["varsigma"] <= 0:
        raise ConfigError("varsigma", "engine time constant must be > 0 "
                          f"(got {p['varsigma']}; 0 makes the dynamics singular)")
    if p["snr_unit"] not in ("linear", "dB"):
        raise ConfigError("snr_unit", f"expected 'linear' or 'dB', got {p['snr_unit']!r}")
    for key in ("snr_u", "snr_d"):
        v = _require_number("", key, p[key])
        if p["snr_unit"] == "linear" and v <= 0:
            raise ConfigError(key, f"linear SNR must be > 0, got {v}")
        p[key] = v
    p["N"] = _require_int("", "N", p["N"])
    if p["N"] < 2:
        raise ConfigError("N", f"need at least 2 steps per loop, got {p['N']}")
    p["L"] = _require_int("", "L", p["L"])
    if p["L"] < 1:
        raise ConfigError("L", f"must be >= 1, got {p['L']}")
    x = np.asarray(p["X_ini"], dtype=float) if not isinstance(p["X_ini"], str) \
        else None
    if x is None or x.shape != (3,):
        raise ConfigError("X_ini", "expected a list of 3 numbers")
    p["X_ini"] = [float(v) for v in x]
    if p["rate_mode"] not in RATE_MODES:
        raise ConfigError("rate_mode",
                          f"expected one of {sorted(RATE_MODES)}, got {p['rate_mode']!r}")
    w = p["weights"]
    if isinstance(w, str):
        if w != "auto":
            raise ConfigError("weights", f"expected 'auto' or a table, got {w!r}")
    elif isinstance(w, dict):
        extra = set(w) - {"P", "R_w", "S"}
        if extra:
            raise ConfigError(_qual("weights", sorted(extra)[0]), "unknown key")
        missing = {"P", "R_w", "S"} - set(w)
        if missing:
            raise ConfigError(_qual("weights", sorted(missing)[0]), "missing")
        w = {"P": _matrix3("weights.P", w["P"]),
             "R_w": _require_number("weights", "R_w", w["R_w"]),
             "S": _matrix3("weights.S", w["S"])}
        if w["R_w"] < 0:
            raise ConfigError("weights.R_w", f"must be >= 0, got {w['R_w']}")
        p["weights"] = w
    else:
        raise ConfigError("weights", f"expected 'auto' or a table, got {w!r}")

    s = dict(_SOLVER_DEFAULTS)
    s.update(solver_raw)
    for key in ("n_w_grid", "n_eps_grid", "penalty_rounds", "gd_max_iters"):
        s[key] = _require_int("solver", key, s[key])
        if s[key] < 1:
            raise ConfigError(_qual("solver", key), f"must be >= 1, got {s[key]}")
    s["refine_iters"] = _require_int("solver", "refine_iters", s["refine_iters"])
    if s["refine_iters"] < 0:
        raise ConfigError("solver.refine_iters", "must be >= 0")
    for key in ("penalty_init", "penalty_growth", "gd_tol", "feas_tol"):
        s[key] = _positive("solver", key, s[key])
    for key in ("eps_min", "eps_max"):
        s[key] = _require_number("solver", key, s[key])
    if not 0 < s["eps_min"] <= s["eps_max"] < 1:
        raise ConfigError("solver.eps_min", "need 0 < eps_min <= eps_max < 1, "
                          f"got [{s['eps_min']}, {s['eps_max']}]")
    for key in ("time_invariant_gains", "gradient_check"):
        s[key] = _require_bool("solver", key, s[key])

    m = dict(_SIM_DEFAULTS)
    m.update(sim_raw)
    for key in ("n_runs", "sim_horizon", "seed"):
        m[key] = _require_int("sim", key, m[key])
    if m["n_runs"] < 1:
        raise ConfigError("sim.n_runs", f"must be >= 1, got {m['n_runs']}")
    if m["sim_horizon"] < 1:
        raise ConfigError("sim.sim_horizon", f"must be >= 1, got {m['sim_horizon']}")
    if m["seed"] < 0:
        raise ConfigError("sim.seed", f"must be >= 0, got {m['seed']}")
    m["settle_band"] = _positive("sim", "settle_band", m["settle_band"])
    if "replan_every" in m:
        m["replan_every"] = _require_int("sim", "replan_every", m["replan_every"])
        if m["replan_every"] < 0:
            raise ConfigError("sim.replan_every", "must be >= 1 (or 0 for one "
                              "plan per horizon)")
    else:
        m["replan_every"] = 0

    return {"problem": p, "solver": s, "sim": m}


def load_config(path) -> dict:
    """Parse and resolve a TOML config, or reuse the resolved set from a
    manifest JSON (any file whose top level carries a "resolved" table)."""
    path = str(path)
    try:
        with open(path, "rb") as fh:
            head = fh.read(1)
            fh.seek(0)
            if path.endswith(".json") or head == b"{":
                data = json.load(fh)
                if not isinstance(data, dict) or "resolved" not in data:
                    raise ConfigError("<file>",
                                      "JSON config must be a manifest with a "
                                      "'resolved' table")
                return resolve(_strip_resolved(data["resolved"]))
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("<file>", f"no such config file: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"TOML parse error: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"JSON parse error: {exc}") from None
    return resolve(raw)


def _strip_resolved(resolved: dict) -> dict:
    """Turn a resolved parameter set back into raw-config shape so it flows
    through the same validation (replan_every 0 means unset)."""
    if not isinstance(resolved, dict):
        raise ConfigError("resolved", "must be a table")
    raw = dict(resolved.get("problem", {}))
    raw["solver"] = dict(resolved.get("solver", {}))
    sim = dict(resolved.get("sim", {}))
    if sim.get("replan_every") == 0:
        sim.pop("replan_every")
    raw["sim"] = sim
    return raw


# ---------------------------------------------------------------------------
# resolved-config -> library objects


def build_problem(resolved: dict) -> CodesignProblem:
    p = resolved["problem"]
    plant = build_plant(varsigma=p["varsigma"], T_d=p["T_d"])
    if p["weights"] == "auto":
        weights = default_stability_weights(plant)
    else:
        w = p["weights"]
        try:
            weights = StabilityWeights(P=np.array(w["P"]), R_w=w["R_w"],
                                       S=np.array(w["S"]))
        except ValueError as exc:
            raise ConfigError("weights", str(exc)) from None
    snr_u, snr_d = p["snr_u"], p["snr_d"]
    if p["snr_unit"] == "dB":
        snr_u, snr_d = snr_db_to_linear(snr_u), snr_db_to_linear(snr_d)
    try:
        return CodesignProblem(
            plant=plant,
            weights=weights,
            traffic=TrafficModel(beta=p["beta"], gamma=p["gamma"], k_s=p["k_s"],
                                 T_s=p["T_s"], N_cmd=p["N"]),
            sensing=SensingConfig(k_s=p["k_s"], sigma=p["sigma"], T_s=p["T_s"],
                                  beta=p["beta"]),
            link_u=LinkConfig(W=1.0, snr=snr_u, L=p["L"], e=p["e_u"],
                              theta=p["theta_u"]),
            link_d=LinkConfig(W=1.0, snr=snr_d, L=p["L"], e=p["e_d"],
                              theta=p["theta_d"]),
            W_0=p["W_0_hz"],
            D_0=p["D_0_s"],
            X_ini=np.array(p["X_ini"]),
            horizon=p["N"],
            rate_mode=p["rate_mode"],
        )
    except ValueError as exc:
        raise ConfigError("<problem>", str(exc)) from None


def build_solver_options(resolved: dict) -> SolverOptions:
    s = dict(resolved["solver"])
    s.pop("gradient_check")
    return SolverOptions(**s)


def build_sim(resolved: dict, seed: int | None = None) -> SimConfig:
    m = resolved["sim"]
    return SimConfig(
        n_runs=m["n_runs"],
        sim_horizon=m["sim_horizon"],
        seed=m["seed"] if seed is None else int(seed),
        settle_band=m["settle_band"],
        replan_every=m["replan_every"] if m["replan_every"] else None,
    )
