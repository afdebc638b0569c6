"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Suites run through ``run_experiment`` so that the same CSV that a user gets
from the command line is what gets checked; criterion 13 reruns every suite
and compares bytes.
"""
import csv
import io
import itertools
import math
import time

import numpy as np
import pytest

from conftest import report
from finsum.hard_instances import phi
from finsum.harness import DEFAULT_HARD_CASES, run_experiment, spider_drift_stats, sweep
from finsum.katyusha import katyusha_params, run_q_katyusha
from finsum.ledger import QueryLedger
from finsum.lowerbound import exhaustive_mdp_check
from finsum.suites import ridge_instance

SEED = 20240601

# coarsest admissible eps per case at n = 4 (shortest chains), next to the defaults
COARSE_HARD_CASES = [
    {"case": 1, "mu": 1 / 28, "eps": 9e-4},
    {"case": 2, "eps": 6e-5},
    {"case": 3, "eps": 0.05},
    {"case": 4, "eps": 0.05},
]

SUITES = {
    "qvrg": {"experiment": "qvrg_stats"},
    "qvrg_mlmc": {"experiment": "qvrg_stats", "params": {"mode": "mlmc"}},
    "mlmc": {"experiment": "mlmc_stats"},
    "katyusha": {"experiment": "katyusha_convergence"},
    "hood": {"experiment": "hood_check"},
    "scaling": {"experiment": "scaling_sweep"},
    "spider": {"experiment": "spider_convergence"},
    "hard": {"experiment": "hard_instance_checks",
             "params": {"cases": DEFAULT_HARD_CASES + COARSE_HARD_CASES}},
    "adversary": {"experiment": "adversary_table"},
    "reductions": {"experiment": "hood_reduction"},
}

_FIRST_RUN = {}


def run_suite(name):
    """Run a suite once, caching its CSV and elapsed time for the rerun check."""
    if name not in _FIRST_RUN:
        t0 = time.perf_counter()
        out = run_experiment(SUITES[name], SEED)
        _FIRST_RUN[name] = (out, time.perf_counter() - t0)
    return _FIRST_RUN[name]


def table(out):
    body = [l for l in out.csv.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_criterion_01_qvrg_contract():
    details, ok = [], True
    for name in ("qvrg", "qvrg_mlmc"):
        out, secs = run_suite(name)
        (r,) = table(out)
        sh = float(r["sigma_hat"])
        bias_ok = float(r["bias_norm"]) <= 4 * sh / 100
        mse_ok = float(r["mse"]) <= 1.2 * sh**2
        ok &= bias_ok and mse_ok and secs < 10 and int(r["calls"]) == 10_000
        details.append(f"{name}: bias/sigma_hat={float(r['bias_norm']) / sh:.4f} (<=0.04) "
                       f"mse/sigma_hat^2={float(r['mse']) / sh**2:.3f} (<=1.2) {secs:.1f}s")
    report(1, "QVRG contract", ok, "; ".join(details))
    assert ok


def test_criterion_02_mlmc_debiasing():
    out, secs = run_suite("mlmc")
    rows = {r["estimator"]: r for r in table(out)}
    deb, naive = rows["debiased"], rows["naive_level0"]
    deb_ok = abs(float(deb["bias"])) <= 4 * float(deb["std_error"])
    naive_ok = float(naive["bias"]) >= 0.4
    ok = deb_ok and naive_ok and secs < 30 and int(deb["runs"]) == 10_000
    report(2, "MLMC debiasing", ok,
           f"debiased bias={float(deb['bias']):.4f} (4SE={4 * float(deb['std_error']):.4f}), "
           f"naive bias={float(naive['bias']):.4f} (>=0.4), {secs:.1f}s")
    assert ok


def test_criterion_03_katyusha_convergence():
    out, secs = run_suite("katyusha")
    rows = table(out)
    ok, details = secs < 120, []
    for kappa in ("10", "100"):
        sub = [r for r in rows if r["kappa"] == kappa]
        med = float(np.median([float(r["F_err"]) for r in sub]))
        eps = float(sub[0]["eps"])
        ok &= len(sub) == 20 and med <= eps
        details.append(f"kappa={kappa}: median err={med:.3g} <= eps={eps:.3g}")
    report(3, "Q-Katyusha convergence", ok, "; ".join(details) + f", {secs:.1f}s")
    assert ok


def test_criterion_04_hood_quarter_decrease():
    out, secs = run_suite("hood")
    rows = table(out)
    ok = all(r["passed"] == "1" for r in rows) and len(rows) == 2
    for r in rows:
        ok &= float(r["mean_error"]) <= float(r["gap"]) / 4 * 1.1
    report(4, "HOOD quarter decrease", ok, "; ".join(
        f"kappa={r['kappa']}: mean err={float(r['mean_error']):.3g} vs 1.1*gap/4="
        f"{float(r['threshold']):.3g}" for r in rows))
    assert ok


def test_criterion_05_ledger_identity():
    checked, bad = 0, 0
    for name in ("katyusha", "scaling"):
        for r in table(run_suite(name)[0]):
            n = int(r.get("n", 16))
            d = int(r.get("d", 8))
            S, b = int(r["S"]), int(r["b"])
            q = float(r.get("quantum_modeled", r.get("quantum_total")))
            checked += 1
            bad += q != S * n + S * b * math.ceil(round(math.sqrt(b * d), 9))
    rng = np.random.default_rng(SEED)
    for mode in ("minibatch", "mlmc", "exact"):
        for _ in range(10):
            n, d = int(rng.integers(2, 200)), int(rng.integers(1, 70))
            inst = ridge_instance(n, d, float(rng.choice([3.0, 30.0])), seed=int(rng.integers(1000)))
            p = katyusha_params(n, d, inst.smoothness, inst.mu, inst.delta, 1e-3 * inst.delta)
            led = QueryLedger()
            run_q_katyusha(inst, p, rng, led, gradient_mode=mode, record=False)
            checked += 1
            bad += led.quantum_modeled_queries != p.S * n + p.S * p.m * math.ceil(
                round(math.sqrt(p.b * d), 9))
    ok = bad == 0
    report(5, "ledger identity", ok, f"{checked} runs, {bad} mismatches")
    assert ok


def test_criterion_06_complexity_shape():
    out, secs = run_suite("scaling")
    rows = table(out)
    ratios = [float(r["ratio"]) for r in rows]
    grid = {(int(r["n"]), int(r["d"]), float(r["kappa"])) for r in rows}
    expected = set(itertools.product([2**e for e in range(6, 13)], [8, 64], [10.0, 100.0]))
    spread = max(ratios) / min(ratios)
    ok = grid == expected and spread <= 50 and secs < 600 and not out.failures
    report(6, "complexity-shape sweep", ok,
           f"{len(rows)} cells, ratio in [{min(ratios):.1f}, {max(ratios):.1f}], "
           f"spread={spread:.2f} (<=50), {secs:.1f}s")
    assert ok


def test_criterion_07_spider():
    t0 = time.perf_counter()
    out, _ = run_suite("spider")
    rows = table(out)
    med = float(np.median([float(r["grad_norm"]) for r in rows]))
    eps = float(rows[0]["eps"])
    bias, var, bound, sigma_hat = spider_drift_stats(calls=10_000, seed=SEED)
    secs = time.perf_counter() - t0
    ok = len(rows) == 20 and med <= 1.2 * eps and var <= 1.2 * bound and secs < 120
    report(7, "FS-Q-SPIDER", ok,
           f"median |grad|={med:.4g} (<= {1.2 * eps:.3g}), drift var={var:.3g} "
           f"(<= {1.2 * bound:.3g}), {secs:.1f}s")
    assert ok


def test_criterion_08_helper_sandwich_and_smoothness():
    rng = np.random.default_rng(SEED)
    worst_sandwich, worst_curv = 0.0, 0.0
    ok = True
    for c in (1e-3, 0.1, 1.0, 7.5):
        z = rng.uniform(-5 * c, 5 * c, 100_000)
        v, _ = phi(z, c)
        ok &= bool(np.all(z * z - 2 * c * c <= v) and np.all(v <= z * z))
        worst_sandwich = max(worst_sandwich, float(np.max(v - z * z)),
                             float(np.max(z * z - 2 * c * c - v)))
        h = c * 1e-3
        grid = np.linspace(-4 * c, 4 * c, 200_001)
        second = (phi(grid + h, c)[0] - 2 * phi(grid, c)[0] + phi(grid - h, c)[0]) / h**2
        worst_curv = max(worst_curv, float(np.max(np.abs(second))))
    ok &= worst_curv <= 4 + 1e-3
    report(8, "helper sandwich and smoothness", ok,
           f"sandwich slack max={worst_sandwich:.3g} (<=0), max |second diff|={worst_curv:.6f} "
           f"(<= 4.001)")
    assert ok


def test_criterion_09_hard_instance_lemmas():
    out, secs = run_suite("hard")
    rows = table(out)
    ok = secs < 300 and len(rows) == 8
    parts = []
    for r in rows:
        ok &= int(r["points"]) == 10_000 and int(r["hypothesis_holds"]) == 10_000
        ok &= int(r["violations"]) == 0 and int(r["d"]) == 2 * (int(r["k"]) + 1)
        parts.append(f"case{r['case']} eps={r['eps']} k={r['k']}: "
                     f"{r['violations']} violations, min gap/thr={float(r['min_gap_over_threshold']):.2f}")
    report(9, "hard-instance lemmas", ok, "; ".join(parts) + f", {secs:.1f}s")
    assert ok


def test_criterion_10_adversary_bound():
    out, secs = run_suite("adversary")
    rows = table(out)
    sizes = [(int(r["n"]), int(r["k"])) for r in rows]
    worst = max(abs(float(r["bound"]) - n * math.sqrt(k)) for r, (n, k) in zip(rows, sizes))
    ok = sizes == [(1, 1), (2, 2), (2, 3), (3, 2), (2, 4)] and worst <= 1e-12 and secs < 60
    report(10, "adversary bound", ok, f"max |bound - n sqrt(k)|={worst:.2g}, {secs:.2f}s")
    assert ok


def test_criterion_11_mdp_reduction():
    t0 = time.perf_counter()
    cases = [(n, k) for n in range(1, 13) for k in range(1, 13) if n * k <= 12]
    total_mismatch, ratio_ok = 0, True
    for n, k in cases:
        mism, mcp_calls, mdp_calls = exhaustive_mdp_check(n, k)
        total_mismatch += mism
        ratio_ok &= mcp_calls == 2 * mdp_calls
    secs = time.perf_counter() - t0
    ok = total_mismatch == 0 and ratio_ok and secs < 60
    report(11, "MDP to MCP reduction", ok,
           f"{len(cases)} (n,k) shapes, {total_mismatch} mismatches, 2 MCP per MDP: {ratio_ok}, "
           f"{secs:.1f}s")
    assert ok


def test_criterion_12_reductions_end_to_end():
    out, secs = run_suite("reductions")
    rows = {r["instance"]: r for r in table(out)}
    ok = secs < 300 and set(rows) == {"lasso", "hinge_l2"}
    parts = []
    for name, r in rows.items():
        err, eps = float(r["F_err"]), float(r["eps"])
        ok &= err <= eps
        parts.append(f"{name}: F err={err:.3g} <= eps={eps:.3g}")
    report(12, "reductions end to end", ok, "; ".join(parts) + f", {secs:.1f}s")
    assert ok


def test_criterion_13_determinism():
    differing = []
    for name in SUITES:
        first, _ = run_suite(name)
        if run_experiment(SUITES[name], SEED).csv != first.csv:
            differing.append(name)
    grid_cfg = {"experiment": "mlmc_stats", "params": {"runs": 2000},
                "grid": {"j_clean": [3, 6], "n0": [1, 2]}}
    serial = sweep(grid_cfg, SEED).csv
    if sweep(grid_cfg, SEED).csv != serial or sweep(grid_cfg, SEED, jobs=2).csv != serial:
        differing.append("sweep")
    ok = not differing
    report(13, "determinism", ok,
           f"{len(SUITES)} suites + sweep rerun byte-identical" if ok else f"differ: {differing}")
    assert ok
