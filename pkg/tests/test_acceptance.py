"""End-to-end acceptance checks, one test per numbered criterion.

Run with -v to get one pass/fail line per criterion. The sweep-backed
criteria (6, 7, 8, 10) share three CLI sweeps executed once per session;
everything is seeded, so outcomes are reproducible bit for bit.
"""

import csv
import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_problem, random_problem

from coloop.cli import main
from coloop.codesign import cost_and_gradient
from coloop.phy import LinkConfig, finite_blocklength_rate, q_function, q_inverse
from coloop.plant import build_plant, lyapunov_terms
from coloop.qos import downlink_arrival_rate, max_delay

CONFIG = str(Path(__file__).resolve().parent.parent / "configs" / "baseline.toml")


def read_summary(out_dir):
    raw = (Path(out_dir) / "summary.csv").read_bytes().decode("utf-8")
    rows = list(csv.DictReader(raw.splitlines()))
    for row in rows:
        for key, value in row.items():
            if key in ("parameter", "status", "feasible"):
                continue
            row[key] = float(value) if value else math.nan
    return rows


def run_sweep(tmp_factory, name, param, values):
    out = tmp_factory.mktemp(name)
    t0 = time.perf_counter()
    rc = main(["sweep", "--config", CONFIG, "--out", str(out),
               "--param", param, "--values", values])
    elapsed = time.perf_counter() - t0
    assert rc == 0
    return out, elapsed


@pytest.fixture(scope="session")
def ks_sweep(tmp_path_factory):
    return run_sweep(tmp_path_factory, "ks_sweep", "k_s", "2,6,10,14,17")


@pytest.fixture(scope="session")
def w0_sweep(tmp_path_factory):
    return run_sweep(tmp_path_factory, "w0_sweep", "W_0",
                     "500000,1000000,1500000")


@pytest.fixture(scope="session")
def d0_sweep(tmp_path_factory):
    return run_sweep(tmp_path_factory, "d0_sweep", "D_0", "0.15,0.1,0.001")


def test_criterion_01_expected_decrease_identity_and_mc():
    # closed form re-derived by conditioning on delivery, checked against
    # the library combination on 1000 instances, then each instance against
    # a 1e5-sample simulation; up to 1% of the z-scores may exceed 3 (the
    # chance rate at exactly 3 SE is already ~0.27% per instance)
    rng = np.random.default_rng(20250816)
    t0 = time.perf_counter()
    n_mc = 100_000
    exceed = 0
    for _ in range(1000):
        plant = build_plant(float(rng.uniform(0.08, 0.3)),
                            float(rng.uniform(0.02, 0.08)))
        M = rng.standard_normal((3, 3))
        P = M @ M.T + 0.1 * np.eye(3)
        X = rng.normal(0.0, 50.0, 3)
        K = rng.normal(0.0, 0.5, 3)
        sigma = float(rng.uniform(0.2, 3.0))
        k_s = int(rng.integers(1, 20))
        eps_c = float(rng.uniform(0.0, 1.0))

        F1, F2 = lyapunov_terms(plant, P, X, K, sigma, k_s)
        lib = (1.0 - eps_c) * F1 - F2
        Z = plant.A_tilde @ X
        Y = Z + float(K @ X) * plant.B_tilde
        bPb = float(plant.B_tilde @ P @ plant.B_tilde)
        s2 = sigma * sigma / k_s
        direct = ((1.0 - eps_c) * (float(Y @ P @ Y) + bPb * float(K @ K) * s2)
                  + eps_c * float(Z @ P @ Z) - float(X @ P @ X))
        scale = 1.0 + abs(float(X @ P @ X)) + abs(F1) + abs(F2)
        assert abs(lib - direct) <= 1e-9 * scale

        noise = rng.normal(0.0, sigma / math.sqrt(k_s), (n_mc, 3))
        eta = rng.random(n_mc) < (1.0 - eps_c)
        u = (X[None, :] + noise) @ K
        X_next = Z[None, :] + np.where(eta, u, 0.0)[:, None] \
            * plant.B_tilde[None, :]
        V_next = np.einsum("ij,jk,ik->i", X_next, P, X_next)
        samples = V_next - float(X @ P @ X)
        se = float(samples.std(ddof=1)) / math.sqrt(n_mc)
        if abs(float(samples.mean()) - lib) > 3.0 * max(se, 1e-300):
            exceed += 1
    elapsed = time.perf_counter() - t0
    assert exceed <= 10
    assert elapsed < 60.0


def test_criterion_02_departure_rate_continuity():
    # random links with the offered load drawn below capacity (the regime
    # the mixing branch is defined for); the one-sided jump at the branch
    # point is ~1e-9*(C - lam)/lam, so unbounded overprovisioning ratios
    # would measure derivative magnitude instead of continuity
    problem = make_problem()
    traffic = problem.traffic
    rng = np.random.default_rng(4242)
    worst = 0.0
    for _ in range(100):
        link = LinkConfig(W=float(rng.uniform(1e4, 5e6)),
                          snr=float(rng.uniform(1.0, 100.0)),
                          L=int(rng.integers(50, 1000)),
                          e=float(rng.uniform(1e-5, 0.4)),
                          theta=float(rng.uniform(1e-4, 1e-2)))
        C = finite_blocklength_rate(link)
        lam_u = C * float(rng.uniform(0.05, 0.95))
        th = link.theta
        base = downlink_arrival_rate(traffic, th, th, link, lam_u)
        bump = downlink_arrival_rate(traffic, th, th * (1 + 1e-9), link, lam_u)
        worst = max(worst, abs(bump - base) / abs(base))
    assert worst <= 1e-6


def test_criterion_03_delay_bound_round_trip():
    rng = np.random.default_rng(31415)
    worst = 0.0
    for _ in range(25):
        theta = float(rng.uniform(1e-4, 1e-2))
        C = float(rng.uniform(1e4, 1e7))
        for eps in np.geomspace(1e-6, 0.4, 40):
            D = max_delay(float(eps), theta, C)
            worst = max(worst, abs(math.exp(-theta * C * D) - float(eps)))
    assert worst <= 1e-12


def test_criterion_04_q_inverse():
    for e in np.geomspace(1e-6, 0.499, 200):
        e = float(e)
        assert abs(q_function(q_inverse(e)) - e) <= 1e-9 * e
    assert abs(q_inverse(0.001) - 3.0902) <= 1e-4


def test_criterion_05_gradient_matches_finite_differences():
    rng = np.random.default_rng(1618)
    t0 = time.perf_counter()
    for _ in range(50):
        problem = random_problem(rng)
        free = 0.05 * rng.standard_normal((problem.horizon - 1, 3))
        _, grad = cost_and_gradient(problem, free, 0.01)
        fd = np.empty_like(free)
        for i in range(free.shape[0]):
            for j in range(3):
                h = 1e-6 * max(1.0, abs(free[i, j]))
                fp = free.copy()
                fp[i, j] += h
                fm = free.copy()
                fm[i, j] -= h
                fd[i, j] = (cost_and_gradient(problem, fp, 0.01)[0]
                            - cost_and_gradient(problem, fm, 0.01)[0]) / (2 * h)
        err = np.linalg.norm(fd - grad) / max(1.0, np.linalg.norm(grad))
        assert err <= 1e-4
    assert time.perf_counter() - t0 < 60.0


def test_criterion_06_sensing_sweep(ks_sweep):
    out, elapsed = ks_sweep
    assert elapsed < 600.0
    rows = {int(r["value"]): r for r in read_summary(out)}
    jitter = [rows[k]["jitter_rms_m"] for k in (2, 6, 10)]
    assert jitter[0] > jitter[1] > jitter[2]
    r17, r10 = rows[17], rows[10]
    congested = (r17["feasible"] == "false"
                 or (r17["loss_rate"] >= 5.0 * r10["loss_rate"]
                     and r17["overshoot_mean_m"] > r10["overshoot_mean_m"]))
    assert congested, (
        "k_s=17 shows no uplink congestion signature: "
        f"feasible={r17['feasible']} loss={r17['loss_rate']:.3e} "
        f"(k_s=10: {r10['loss_rate']:.3e}) "
        f"overshoot={r17['overshoot_mean_m']:.3f} "
        f"(k_s=10: {r10['overshoot_mean_m']:.3f})")


def test_criterion_07_bandwidth_sweep(w0_sweep):
    out, elapsed = w0_sweep
    assert elapsed < 600.0
    rows = {r["value"]: r for r in read_summary(out)}
    lo, mid, hi = rows[500000.0], rows[1000000.0], rows[1500000.0]
    overlap = abs(mid["settle_time_mean_s"] - hi["settle_time_mean_s"]) \
        <= mid["settle_time_ci95_s"] + hi["settle_time_ci95_s"]
    assert overlap
    worse_settle = lo["settle_time_mean_s"] - lo["settle_time_ci95_s"] \
        > hi["settle_time_mean_s"] + hi["settle_time_ci95_s"]
    worse_jitter = lo["jitter_rms_m"] > hi["jitter_rms_m"]
    assert worse_settle or worse_jitter, (
        "0.5 MHz is not measurably worse: settle "
        f"{lo['settle_time_mean_s']:.3f}+-{lo['settle_time_ci95_s']:.3f} s vs "
        f"{hi['settle_time_mean_s']:.3f}+-{hi['settle_time_ci95_s']:.3f} s, "
        f"jitter {lo['jitter_rms_m']:.4f} vs {hi['jitter_rms_m']:.4f} m")


def test_criterion_08_cycle_budget_sweep(d0_sweep):
    out, elapsed = d0_sweep
    assert elapsed < 600.0
    rows = {r["value"]: r for r in read_summary(out)}
    relaxed, mid, harsh = rows[0.15], rows[0.1], rows[0.001]
    # the two generous budgets are statistically indistinguishable
    assert abs(relaxed["settle_time_mean_s"] - mid["settle_time_mean_s"]) \
        <= relaxed["settle_time_ci95_s"] + mid["settle_time_ci95_s"]
    # the harsh budget degrades: settling beyond CI overlap
    assert harsh["settle_time_mean_s"] - harsh["settle_time_ci95_s"] \
        > relaxed["settle_time_mean_s"] + relaxed["settle_time_ci95_s"]


def test_criterion_09_manifest_reruns_are_byte_identical(tmp_path_factory):
    t0 = time.perf_counter()
    base = tmp_path_factory.mktemp("repro")
    s1, s2 = base / "solve1", base / "solve2"
    assert main(["solve", "--config", CONFIG, "--out", str(s1)]) == 0
    assert main(["solve", "--config", str(s1 / "manifest.json"),
                 "--out", str(s2)]) == 0
    assert (s1 / "solution.json").read_bytes() \
        == (s2 / "solution.json").read_bytes()

    m1, m2 = base / "sim1", base / "sim2"
    assert main(["simulate", str(s1 / "solution.json"),
                 "--config", str(s1 / "manifest.json"), "--out", str(m1)]) == 0
    assert main(["simulate", str(s1 / "solution.json"),
                 "--config", str(m1 / "manifest.json"), "--out", str(m2)]) == 0
    for name in ("trajectories.csv", "summary.csv"):
        assert (m1 / name).read_bytes() == (m2 / name).read_bytes()
    assert time.perf_counter() - t0 < 300.0


def test_criterion_10_loss_rates_track_eps_c(ks_sweep, w0_sweep, d0_sweep):
    checked = 0
    for out, _ in (ks_sweep, w0_sweep, d0_sweep):
        for row in read_summary(out):
            if row["feasible"] != "true":
                continue
            eps_c = row["eps_c"]
            attempts = row["loss_attempts"]
            assert attempts > 0
            se = math.sqrt(eps_c * (1.0 - eps_c) / attempts)
            assert abs(row["loss_rate"] - eps_c) <= 3.0 * se, (
                f"{row['parameter']}={row['value']}: loss "
                f"{row['loss_rate']:.3e} vs eps_c {eps_c:.3e} "
                f"(3 SE = {3 * se:.3e}, attempts {attempts:.0f})")
            checked += 1
    assert checked >= 8  # every feasible row across the three sweeps


def test_criterion_11_report_renders_sweep_artifacts(ks_sweep, w0_sweep,
                                                     tmp_path_factory):
    import re

    from loopreport.cli import main as report_main

    def csv_cells(out):
        cells = set()
        raw = (Path(out) / "summary.csv").read_bytes().decode("utf-8")
        for line in raw.splitlines():
            cells.update(line.split(","))
        return cells

    fig_dir = tmp_path_factory.mktemp("report_ks")
    assert report_main(["--in", str(ks_sweep[0]),
                        "--out", str(fig_dir)]) == 0
    svg = (fig_dir / "trajectories.svg").read_text(encoding="utf-8")
    assert svg.count('class="mean"') == 5
    # any number the figure prints must be a cell of the input CSVs
    cells = csv_cells(ks_sweep[0])
    texts = re.findall(r"<text[^>]*>([^<]*)</text>", svg)
    for text in texts:
        for token in re.findall(r"\d+(?:\.\d+)?(?:e-?\d+)?", text):
            assert token in cells, f"figure prints {token!r} not in any CSV"

    tab_dir = tmp_path_factory.mktemp("report_w0")
    assert report_main(["--in", str(w0_sweep[0]),
                        "--out", str(tab_dir)]) == 0
    lines = (tab_dir / "summary.txt").read_text(encoding="utf-8").splitlines()
    cells = csv_cells(w0_sweep[0])
    data = [ln for ln in lines[2:] if ln and not ln.startswith("! marks")]
    assert len(data) == 3
    for line in data:
        for token in line.lstrip("! ").split():
            assert token in cells, f"table prints {token!r} not in any CSV"
