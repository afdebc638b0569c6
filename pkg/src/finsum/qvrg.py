"""Variance-reduced gradient differences with a prescribed RMSE.

Estimates g_bar = (1/n) sum_i (grad f_i(x) - grad f_i(x_ref)).  Each sample
draws i uniformly and costs two classical component queries; the modelled
quantum charge is ceil(sqrt(d) * sigma / sigma_hat) with sigma = l*||x - x_ref||,
the per-sample bound that l-smoothness gives.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .ledger import QueryLedger, ceil_tol
from .mlmc import BiasedFamilySpec, SamplerSpec, minibatch_mean, mlmc_debias
from .problem import ProblemInstance, UnsupportedInstanceError, as_vector

MODES = ("minibatch", "mlmc", "exact")

# Levels used by the MLMC path.  With zero injected bias the single-term
# estimator has MSE at most (1 + 2*j_clean) * sigma^2 / n0, so n0 is inflated
# by that factor to keep the sigma_hat contract.
_MLMC_LEVELS = 2


def gradient_difference_sampler(instance: ProblemInstance, x, x_ref) -> SamplerSpec:
    obj = instance.objective
    ell = obj.smoothness
    sigma = ell * float(np.linalg.norm(x - x_ref))

    def many(rng, count):
        idx = rng.integers(0, obj.n, size=count)
        return obj.gradients(idx, x) - obj.gradients(idx, x_ref)

    return SamplerSpec(sample=lambda rng: many(rng, 1)[0], variance_bound=sigma**2,
                       d=obj.d, per_sample_classical_cost=2, sample_many=many)


def exact_gbar(instance: ProblemInstance, x, x_ref) -> np.ndarray:
    """g_bar by full enumeration over the n components (no charge)."""
    obj = instance.objective
    return obj.mean_gradient(x) - obj.mean_gradient(x_ref)


def _require_smooth(instance: ProblemInstance) -> float:
    ell = instance.objective.smoothness
    if not ell > 0:
        raise UnsupportedInstanceError("QVRG needs a smooth instance (l > 0)")
    return ell


def qvrg(instance: ProblemInstance, x, x_ref, sigma_hat: float,
         rng: np.random.Generator, ledger: Optional[QueryLedger] = None,
         mode: str = "minibatch", phase: str = "qvrg") -> np.ndarray:
    """Unbiased estimate of g_bar with E||g - g_bar||^2 <= sigma_hat^2."""
    _require_smooth(instance)
    if not sigma_hat > 0:
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat}")
    x = as_vector(x, instance.d)
    x_ref = as_vector(x_ref, instance.d)
    sampler = gradient_difference_sampler(instance, x, x_ref)
    if mode == "minibatch":
        return minibatch_mean(sampler, sigma_hat, rng, ledger, phase).estimate
    if mode == "exact":
        if ledger is not None:
            ledger.charge_classical(phase, 2 * instance.n)
            ledger.charge_quantum_mean(phase, instance.d, sampler.sigma, sigma_hat)
        return exact_gbar(instance, x, x_ref)
    if mode == "mlmc":
        B = max(1, ceil_tol(sampler.variance_bound / sigma_hat**2))
        fam = BiasedFamilySpec(sampler, n0=B * (1 + 2 * _MLMC_LEVELS), j_clean=_MLMC_LEVELS,
                               bias=lambda j: np.zeros(instance.d))
        est = mlmc_debias(fam, rng, ledger, phase)
        if ledger is not None:
            ledger.charge_quantum_mean(phase, instance.d, sampler.sigma, sigma_hat)
        return est
    raise ValueError(f"unknown QVRG mode {mode!r}; expected one of {MODES}")


def qvrg_relative(instance: ProblemInstance, x, x_ref, batch: int,
                  rng: np.random.Generator, ledger: Optional[QueryLedger] = None,
                  mode: str = "minibatch", phase: str = "qvrg") -> np.ndarray:
    """QVRG with sigma_hat = l*||x - x_ref|| / sqrt(batch).

    This is the optimizer call site.  The batch is exactly ``batch`` and the
    modelled charge is ceil(sqrt(batch * d)) for every call, including the
    degenerate x == x_ref where the ratio sigma / sigma_hat is 0/0 and the
    estimate is exactly zero.
    """
    _require_smooth(instance)
    if batch < 1:
        raise ValueError("batch must be at least 1")
    x = as_vector(x, instance.d)
    x_ref = as_vector(x_ref, instance.d)
    n, d = instance.n, instance.d
    if mode == "exact":
        est = exact_gbar(instance, x, x_ref)
        classical = 2 * n
    elif mode in ("minibatch", "mlmc"):
        sampler = gradient_difference_sampler(instance, x, x_ref)
        if np.array_equal(x, x_ref):
            est, classical = np.zeros(d), 2 * batch
        elif mode == "minibatch":
            est = sampler.draw(rng, batch).mean(axis=0)
            classical = 2 * batch
        else:
            fam = BiasedFamilySpec(sampler, n0=batch * (1 + 2 * _MLMC_LEVELS),
                                   j_clean=_MLMC_LEVELS, bias=lambda j: np.zeros(d))
            sub = QueryLedger()
            est = mlmc_debias(fam, rng, sub, phase)
            classical = sub.classical_queries
    else:
        raise ValueError(f"unknown QVRG mode {mode!r}; expected one of {MODES}")
    if ledger is not None:
        ledger.charge_classical(phase, classical)
        ledger.charge_quantum(phase, ceil_tol(math.sqrt(batch * d)))
    return est
