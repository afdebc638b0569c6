"""Experiment suites, configuration schema, sweeps and CSV emission.

A run is fully determined by (config, seed).  Every CSV starts with one
comment line carrying the tool version, the config hash and the seed; every
data row repeats the config hash so concatenated outputs stay attributable.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .hard_instances import adversarial_points, gen_hard_instance, suboptimality_check
from .katyusha import hood_report, katyusha_params, run_q_katyusha
from .ledger import QueryLedger
from .lowerbound import mcp_bound_table
from .mlmc import BiasedFamilySpec, SamplerSpec, geometric_bias, mlmc_debias
from .problem import evaluate
from .qvrg import exact_gbar, qvrg
from .reductions import adapt_reg, adapt_smooth
from .spider import run_fs_q_spider, spider_params
from .suites import (hinge_l2_instance, indefinite_quadratic_instance, lasso_instance,
                     ridge_instance)

SEED_MAX = 2**64 - 1


class SchemaError(ValueError):
    """Configuration does not match the schema."""


@dataclass
class ExperimentResult:
    columns: List[str]
    rows: List[List[Any]]
    failures: List[str] = field(default_factory=list)


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, *stream])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


# -- suites -----------------------------------------------------------------------

def katyusha_convergence(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["kappa", "rep", "S", "b", "m", "F_err", "eps", "classical", "quantum_modeled",
            "quantum_closed_form"]
    rows, failures = [], []
    for kappa in p["kappas"]:
        inst = ridge_instance(p["n"], p["d"], kappa, seed=p["instance_seed"])
        eps = p["eps_rel"] * inst.delta
        par = katyusha_params(inst.n, inst.d, inst.smoothness, inst.mu, inst.delta, eps)
        closed = par.quantum_total(inst.n, inst.d)
        errs = []
        for rep in range(p["repetitions"]):
            led = QueryLedger()
            tr = run_q_katyusha(inst, par, _rng(seed, int(kappa), rep), led,
                                gradient_mode=p["gradient_mode"], record=False)
            err = tr.f_out - inst.f_star
            errs.append(err)
            rows.append([kappa, rep, par.S, par.b, par.m, err, eps, led.classical_queries,
                         led.quantum_modeled_queries, closed])
            if led.quantum_modeled_queries != closed:
                failures.append(f"ledger identity broken: kappa={kappa} rep={rep}")
        if np.median(errs) > eps:
            failures.append(f"median error {np.median(errs):.3g} > eps {eps:.3g} at kappa={kappa}")
    return ExperimentResult(cols, rows, failures)


def hood_check(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["kappa", "gap", "mean_error", "threshold", "passed"]
    rows, failures = [], []
    for kappa in p["kappas"]:
        inst = ridge_instance(p["n"], p["d"], kappa, seed=p["instance_seed"])
        seeds = [seed + r for r in range(p["repetitions"])]
        rep = hood_report(inst, seeds=seeds, tolerance=p["tolerance"])
        rows.append([kappa, rep.gap, rep.mean_error, rep.gap / 4 * rep.tolerance, rep.passed])
        if not rep.passed:
            failures.append(f"HOOD check failed at kappa={kappa}")
    return ExperimentResult(cols, rows, failures)


def spider_convergence(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["rep", "grad_norm", "eps", "early_exit", "t_exit", "classical", "quantum_modeled"]
    inst = indefinite_quadratic_instance(p["n"], p["d"], seed=p["instance_seed"])
    par = spider_params(inst.n, inst.d, inst.smoothness, inst.delta, p["eps"])
    rows, norms = [], []
    for rep in range(p["repetitions"]):
        led = QueryLedger()
        res = run_fs_q_spider(inst, par, _rng(seed, rep), led)
        gn = float(np.linalg.norm(inst.objective.mean_gradient(res.x)))
        norms.append(gn)
        rows.append([rep, gn, p["eps"], res.early_exit, res.t_exit, led.classical_queries,
                     led.quantum_modeled_queries])
    failures = []
    if np.median(norms) > p["tolerance"] * p["eps"]:
        failures.append(f"median gradient norm {np.median(norms):.3g} > {p['tolerance']}*eps")
    return ExperimentResult(cols, rows, failures)


def spider_drift_stats(n=16, d=8, eps=0.05, calls=10_000, instance_seed=0, seed=0):
    """Freeze (x_t, x_{t-1}) one step apart and resample the increment.

    Returns (bias_norm, empirical_variance, variance_bound, sigma_hat).
    """
    inst = indefinite_quadratic_instance(n, d, seed=instance_seed)
    par = spider_params(n, d, inst.smoothness, inst.delta, eps)
    rng = _rng(seed, 0)
    x_prev = rng.standard_normal(d)
    u = rng.standard_normal(d)
    x = x_prev - par.step(inst.smoothness) * u / np.linalg.norm(u)
    target = exact_gbar(inst, x, x_prev)
    draws = np.stack([qvrg(inst, x, x_prev, par.sigma_hat, rng) for _ in range(calls)])
    bias = float(np.linalg.norm(draws.mean(axis=0) - target))
    var = float(np.mean(np.sum((draws - target) ** 2, axis=1)))
    return bias, var, par.eps_hat**2 / (2 * par.period_q), par.sigma_hat


def qvrg_stats(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["calls", "sigma_hat", "bias_norm", "bias_bound", "mse", "mse_bound", "passed"]
    n, d, calls = p["n"], p["d"], p["calls"]
    inst = ridge_instance(n, d, 10.0, seed=p["instance_seed"])
    rng = _rng(seed, 0)
    x, x_ref = rng.standard_normal(d), rng.standard_normal(d)
    sigma_hat = p["sigma_hat_ratio"] * inst.smoothness * float(np.linalg.norm(x - x_ref))
    target = exact_gbar(inst, x, x_ref)
    draws = np.stack([qvrg(inst, x, x_ref, sigma_hat, rng, mode=p["mode"]) for _ in range(calls)])
    bias = float(np.linalg.norm(draws.mean(axis=0) - target))
    mse = float(np.mean(np.sum((draws - target) ** 2, axis=1)))
    bias_bound = 4 * sigma_hat / math.sqrt(calls)
    ok = bias <= bias_bound and mse <= 1.2 * sigma_hat**2
    res = ExperimentResult(cols, [[calls, sigma_hat, bias, bias_bound, mse, 1.2 * sigma_hat**2, ok]])
    if not ok:
        res.failures.append("QVRG contract violated")
    return res


def mlmc_family(beta0=0.5, j_clean=6, n0=1, mean=1.0, sd=1.0) -> BiasedFamilySpec:
    """Scalar Gaussian family with geometric bias vanishing at j_clean."""

    def many(rng, count):
        return mean + sd * rng.standard_normal((count, 1))

    sampler = SamplerSpec(sample=lambda rng: many(rng, 1)[0], variance_bound=sd**2, d=1,
                          sample_many=many)
    return BiasedFamilySpec(sampler, n0=n0, j_clean=j_clean, bias=geometric_bias(beta0, j_clean))


def mlmc_stats(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["estimator", "runs", "mean", "bias", "std_error", "passed"]
    fam = mlmc_family(p["beta0"], p["j_clean"], p["n0"], p["mean"])
    rng = _rng(seed, 0)
    runs = p["runs"]
    deb = np.array([mlmc_debias(fam, rng)[0] for _ in range(runs)])
    naive = np.array([fam.level_estimator(0, rng)[0] for _ in range(runs)])
    rows, failures = [], []
    for name, arr in (("debiased", deb), ("naive_level0", naive)):
        se = float(arr.std(ddof=1) / math.sqrt(runs))
        bias = float(arr.mean() - p["mean"])
        ok = abs(bias) <= 4 * se if name == "debiased" else bias >= 0.4
        rows.append([name, runs, float(arr.mean()), bias, se, ok])
        if not ok:
            failures.append(f"{name} estimator outside its bias criterion")
    return ExperimentResult(cols, rows, failures)


def hood_reduction(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["instance", "eps", "F_err", "stages", "classical", "quantum_modeled", "passed"]
    rows, failures = [], []
    specs = [("lasso", lasso_instance(p["lasso_n"], p["lasso_d"], p["lam1"],
                                      seed=p["instance_seed"], iters=p["reference_iters"]),
              adapt_reg),
             ("hinge_l2", hinge_l2_instance(p["hinge_n"], p["hinge_d"], p["hinge_mu"],
                                            seed=p["instance_seed"], iters=p["reference_iters"]),
              adapt_smooth)]
    for name, inst, reduce in specs:
        eps = p["eps_rel"] * inst.delta
        led = QueryLedger()
        res = reduce(inst, eps, rng=_rng(seed, len(rows)), ledger=led)
        err = evaluate(inst, res.x) - inst.optimum_lower()
        ok = err <= eps
        rows.append([name, eps, err, len(res.stages), led.classical_queries,
                     led.quantum_modeled_queries, ok])
        if not ok:
            failures.append(f"{name}: F error {err:.3g} > eps {eps:.3g}")
    return ExperimentResult(cols, rows, failures)


DEFAULT_HARD_CASES = [
    {"case": 1, "mu": 1 / 28, "eps": 5e-5},
    {"case": 2, "eps": 5e-5},
    {"case": 3, "eps": 0.01},
    {"case": 4, "eps": 0.01},
]


def hard_instance_checks(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["case", "n", "k", "d", "eps", "points", "hypothesis_holds", "violations",
            "min_gap_over_threshold"]
    rows, failures = [], []
    for spec in p["cases"]:
        spec = dict(spec)
        case = spec.pop("case")
        inst = gen_hard_instance(case, p["n"], seed=p["instance_seed"], **spec)
        pts = adversarial_points(inst, p["points"], _rng(seed, case))
        verdicts = [suboptimality_check(inst, x, inst.eps) for x in pts]
        viol = sum(v.verdict == "violates" for v in verdicts)
        hyp = sum(v.hypothesis for v in verdicts)
        ratio = min(v.gap / v.threshold for v in verdicts)
        rows.append([case, inst.n, inst.k, inst.d, inst.eps, len(pts), hyp, viol, ratio])
        if viol:
            failures.append(f"case {case}: {viol} lemma violations")
    return ExperimentResult(cols, rows, failures)


def adversary_table(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["n", "k", "bound", "expected", "max_abs_deviation"]
    table = mcp_bound_table([tuple(s) for s in p["sizes"]])
    failures = [f"(n,k)=({n},{k}) deviation {dev:.3g}" for n, k, _, _, dev in table if dev > 1e-12]
    return ExperimentResult(cols, [list(r) for r in table], failures)


def theory_value(n: int, d: int, kappa: float) -> float:
    return n + math.sqrt(d) + math.sqrt(kappa) * (n ** (1 / 3) * d ** (1 / 3)
                                                  + n ** (-2 / 3) * d ** (5 / 6))


def scaling_sweep(p: Dict[str, Any], seed: int) -> ExperimentResult:
    cols = ["n", "d", "kappa", "S", "b", "classical_total", "quantum_total", "theory_value",
            "ratio"]
    rows, failures = [], []
    for n, d, kappa in itertools.product(p["ns"], p["ds"], p["kappas"]):
        inst = ridge_instance(n, d, kappa, seed=p["instance_seed"])
        par = katyusha_params(n, d, inst.smoothness, inst.mu, inst.delta, p["eps_rel"] * inst.delta)
        led = QueryLedger()
        run_q_katyusha(inst, par, _rng(seed, n, d, int(kappa)), led, record=False)
        th = theory_value(n, d, kappa)
        rows.append([n, d, kappa, par.S, par.b, led.classical_queries,
                     led.quantum_modeled_queries, th, led.quantum_modeled_queries / th])
        if led.quantum_modeled_queries != par.quantum_total(n, d):
            failures.append(f"ledger identity broken at n={n} d={d} kappa={kappa}")
    ratios = [r[-1] for r in rows]
    if rows and max(ratios) / min(ratios) > p["max_spread"]:
        failures.append(f"ratio spread {max(ratios) / min(ratios):.3g} > {p['max_spread']}")
    return ExperimentResult(cols, rows, failures)


EXPERIMENTS: Dict[str, Callable[[Dict[str, Any], int], ExperimentResult]] = {
    "katyusha_convergence": katyusha_convergence,
    "hood_check": hood_check,
    "spider_convergence": spider_convergence,
    "qvrg_stats": qvrg_stats,
    "mlmc_stats": mlmc_stats,
    "hood_reduction": hood_reduction,
    "hard_instance_checks": hard_instance_checks,
    "adversary_table": adversary_table,
    "scaling_sweep": scaling_sweep,
}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "katyusha_convergence": dict(n=16, d=8, kappas=[10, 100], eps_rel=1e-6, repetitions=20,
                                 instance_seed=0, gradient_mode="minibatch"),
    "hood_check": dict(n=16, d=8, kappas=[10, 100], repetitions=20, instance_seed=0,
                       tolerance=1.1),
    "spider_convergence": dict(n=16, d=8, eps=0.05, repetitions=20, instance_seed=0,
                               tolerance=1.2),
    "qvrg_stats": dict(n=8, d=8, calls=10_000, sigma_hat_ratio=0.5, instance_seed=0,
                       mode="minibatch"),
    "mlmc_stats": dict(runs=10_000, beta0=0.5, j_clean=6, n0=1, mean=1.0),
    "hood_reduction": dict(lasso_n=16, lasso_d=8, lam1=0.1, hinge_n=8, hinge_d=8, hinge_mu=0.1,
                           eps_rel=1e-3, reference_iters=10**6, instance_seed=0),
    "hard_instance_checks": dict(n=4, points=10_000, instance_seed=0,
                                 cases=copy.deepcopy(DEFAULT_HARD_CASES)),
    "adversary_table": dict(sizes=[[1, 1], [2, 2], [2, 3], [3, 2], [2, 4]]),
    "scaling_sweep": dict(ns=[2**e for e in range(6, 13)], ds=[8, 64], kappas=[10, 100],
                          eps_rel=1e-6, instance_seed=0, max_spread=50.0),
}

TOP_LEVEL_KEYS = {"experiment", "params", "seed", "repetitions", "output", "grid"}


# -- config ---------------------------------------------------------------------

def validate_seed(seed) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= SEED_MAX:
        raise SchemaError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return seed


def validate_config(config: Dict[str, Any], allow_grid: bool = False) -> Dict[str, Any]:
    """Return the config with defaults filled in; raise SchemaError listing bad keys."""
    if not isinstance(config, dict):
        raise SchemaError("config must be a JSON object")
    bad = sorted(set(config) - TOP_LEVEL_KEYS)
    if not allow_grid and "grid" in config:
        bad.append("grid")
    if bad:
        raise SchemaError(f"unknown config keys: {', '.join(bad)}")
    kind = config.get("experiment")
    if kind not in EXPERIMENTS:
        raise SchemaError(f"experiment must be one of {sorted(EXPERIMENTS)}, got {kind!r}")
    params = config.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("params must be an object")
    defaults = DEFAULTS[kind]
    bad = sorted(set(params) - set(defaults))
    if "repetitions" in config and "repetitions" not in defaults:
        bad.append("repetitions")
    grid = config.get("grid", {})
    if not isinstance(grid, dict):
        raise SchemaError("grid must be an object mapping parameter names to lists")
    bad += sorted(k for k in grid if k not in defaults)
    if bad:
        raise SchemaError(f"unknown parameter keys for {kind}: {', '.join(bad)}")
    for k, vals in grid.items():
        if not isinstance(vals, list) or not vals:
            raise SchemaError(f"grid entry {k!r} must be a non-empty list")
    merged = copy.deepcopy(defaults)
    merged.update(copy.deepcopy(params))
    if "repetitions" in config:
        merged["repetitions"] = config["repetitions"]
    for k, default in defaults.items():
        v = merged[k]
        if isinstance(default, bool):
            ok = isinstance(v, bool)
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            ok = isinstance(v, (int, float)) and not isinstance(v, bool)
        else:
            ok = isinstance(v, type(default))
        if not ok:
            raise SchemaError(f"parameter {k!r} has wrong type {type(v).__name__}")
    out = {"experiment": kind, "params": merged,
           "seed": validate_seed(config.get("seed", 0))}
    if grid:
        out["grid"] = grid
    if "output" in config:
        out["output"] = config["output"]
    return out


def config_hash(config: Dict[str, Any]) -> str:
    """Hash of the normalised config, excluding seed and output path."""
    body = {k: v for k, v in config.items() if k not in ("seed", "output")}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _header(config, seed) -> str:
    return (f"# finsum {__version__} experiment={config['experiment']} "
            f"config={config_hash(config)} seed={seed}\n")


@dataclass
class RunOutput:
    csv: str
    failures: List[str]


def run_experiment(config: Dict[str, Any], seed: Optional[int] = None) -> RunOutput:
    config = validate_config(config)
    seed = validate_seed(config["seed"] if seed is None else seed)
    res = EXPERIMENTS[config["experiment"]](config["params"], seed)
    h = config_hash(config)
    buf = io.StringIO()
    buf.write(_header(config, seed))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash"] + res.columns)
    for row in res.rows:
        w.writerow([h] + [_fmt(v) for v in row])
    return RunOutput(buf.getvalue(), res.failures)


def sweep_cells(config: Dict[str, Any]) -> List[Dict[str, Any]]:
    grid = config.get("grid", {})
    keys = list(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        cells.append(dict(zip(keys, values)))
    return cells


def _run_cell(args):
    kind, params, cell_seed = args
    try:
        return "ok", EXPERIMENTS[kind](params, cell_seed)
    except Exception as exc:  # a failed cell is reported, not fatal
        return f"error: {type(exc).__name__}: {exc}".replace("\n", " "), None


def sweep(config: Dict[str, Any], seed: Optional[int] = None, jobs: int = 1) -> RunOutput:
    """Run every grid cell with seed XOR cell index; rows merged in cell order."""
    config = validate_config(config, allow_grid=True)
    seed = validate_seed(config["seed"] if seed is None else seed)
    kind = config["experiment"]
    cells = sweep_cells(config)
    tasks = []
    for idx, cell in enumerate(cells):
        params = copy.deepcopy(config["params"])
        params.update(cell)
        tasks.append((kind, params, seed ^ idx))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    h = config_hash(config)
    grid_keys = list(config.get("grid", {}))
    columns = next((r.columns for s, r in results if r is not None), [])
    buf = io.StringIO()
    buf.write(_header(config, seed))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash", "cell", "cell_seed", "status"] + grid_keys + columns)
    failures = []
    for idx, ((status, res), cell, task) in enumerate(zip(results, cells, tasks)):
        gvals = [json.dumps(cell[k]) if isinstance(cell[k], (list, dict)) else _fmt(cell[k])
                 for k in grid_keys]
        prefix = [h, idx, task[2]]
        if res is None:
            w.writerow([_fmt(v) for v in prefix] + [status] + gvals + [""] * len(columns))
            failures.append(f"cell {idx}: {status}")
            continue
        if res.failures:
            status = "invariant_failed"
            failures += [f"cell {idx}: {f}" for f in res.failures]
        for row in res.rows:
            w.writerow([_fmt(v) for v in prefix] + [status] + gvals + [_fmt(v) for v in row])
    return RunOutput(buf.getvalue(), failures)
