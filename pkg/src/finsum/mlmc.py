"""Unbiased mean estimation: a minibatch stand-in and an MLMC debiaser.

``minibatch_mean`` meets the same statistical contract as the quantum mean
estimator it stands in for (unbiased, mean-squared error at most sigma_hat^2)
while the ledger records the modelled quantum price.  ``mlmc_debias`` turns a
family of biased estimators, whose bias vanishes past a known level, into an
exactly unbiased one by a randomised telescoping sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ledger import QueryLedger, ceil_tol, quantum_mean_cost


@dataclass
class SamplerSpec:
    """i.i.d. draws of a d-dimensional random variable X with Var[X] <= sigma^2.

    ``sample`` returns one draw; ``sample_many(rng, B)`` (optional) returns a
    (B, d) array and is used when present.  Both must consume the RNG the same
    way for a given B if determinism across code paths matters to the caller.
    """

    sample: Callable[[np.random.Generator], np.ndarray]
    variance_bound: float
    d: int
    per_sample_classical_cost: int = 1
    sample_many: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None

    def __post_init__(self):
        if self.variance_bound < 0:
            raise ValueError("variance bound must be non-negative")
        if self.per_sample_classical_cost < 1:
            raise ValueError("per-sample cost must be at least 1")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.variance_bound))

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.sample_many is not None:
            out = np.asarray(self.sample_many(rng, count), dtype=float)
            return out.reshape(count, self.d)
        return np.stack([np.asarray(self.sample(rng), dtype=float).reshape(self.d)
                         for _ in range(count)])


@dataclass
class EstimateResult:
    estimate: np.ndarray
    sigma_hat: float
    classical_cost: int
    quantum_modeled_cost: float
    batch: int = 1


def minibatch_size(variance_bound: float, sigma_hat: float) -> int:
    """B = max(1, ceil(sigma^2 / sigma_hat^2))."""
    if not sigma_hat > 0:
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat}")
    return max(1, ceil_tol(variance_bound / sigma_hat**2))


def minibatch_mean(sampler: SamplerSpec, sigma_hat: float, rng: np.random.Generator,
                   ledger: Optional[QueryLedger] = None,
                   phase: str = "mean_estimation") -> EstimateResult:
    """Empirical mean of B i.i.d. draws, with B chosen from the variance bound."""
    B = minibatch_size(sampler.variance_bound, sigma_hat)
    est = sampler.draw(rng, B).mean(axis=0)
    classical = B * sampler.per_sample_classical_cost
    quantum = quantum_mean_cost(sampler.d, sampler.sigma, sigma_hat)
    if ledger is not None:
        ledger.charge_classical(phase, classical)
        ledger.charge_quantum(phase, quantum)
    return EstimateResult(est, sigma_hat, classical, quantum, B)


@dataclass
class BiasedFamilySpec:
    """Levels B_j = mean of the first n0*2^j draws of ``sampler`` plus beta_j.

    ``bias(j)`` returns the injected offset beta_j; it must be exactly zero for
    every j >= j_clean.  Levels share one sample stream, which couples
    consecutive levels and keeps the telescoping differences small.
    """

    sampler: SamplerSpec
    n0: int
    j_clean: int
    bias: Callable[[int], np.ndarray]

    def __post_init__(self):
        if self.n0 < 1 or self.j_clean < 0:
            raise ValueError("need n0 >= 1 and j_clean >= 0")
        if np.any(np.asarray(self.bias(self.j_clean)) != 0):
            raise ValueError("bias must vanish at j_clean")

    def level_cost(self, j: int) -> int:
        return self.n0 * 2**j

    def level_from_stream(self, j: int, stream: np.ndarray) -> np.ndarray:
        return stream[: self.level_cost(j)].mean(axis=0) + np.asarray(self.bias(j), dtype=float)

    def level_estimator(self, j: int, rng: np.random.Generator) -> np.ndarray:
        """A single (biased) draw of B_j on fresh samples."""
        return self.level_from_stream(j, self.sampler.draw(rng, self.level_cost(j)))


def geometric_bias(beta0, j_clean: int) -> Callable[[int], np.ndarray]:
    """beta_j = beta0 * 2^-j for j < j_clean and exactly 0 afterwards."""
    beta0 = np.atleast_1d(np.asarray(beta0, dtype=float))

    def bias(j: int) -> np.ndarray:
        return beta0 * 2.0**-j if j < j_clean else np.zeros_like(beta0)

    return bias


def level_probabilities(j_clean: int) -> np.ndarray:
    """P(J=j) = 2^-(j+1) for j < j_clean, with the tail mass 2^-j_clean at j_clean."""
    p = 0.5 ** (np.arange(j_clean + 1) + 1.0)
    p[j_clean] = 0.5**j_clean
    return p


def expected_level_cost(family: BiasedFamilySpec) -> float:
    p = level_probabilities(family.j_clean)
    return float(sum(p[j] * family.level_cost(j) for j in range(family.j_clean + 1)))


def mlmc_debias(family: BiasedFamilySpec, rng: np.random.Generator,
                ledger: Optional[QueryLedger] = None, phase: str = "mlmc") -> np.ndarray:
    """Single-term randomised MLMC estimate B_0 + (B_J - B_{J-1}) / P(J).

    Unbiased because the telescoping sum stops at j_clean where the bias is
    exactly zero.
    """
    p = level_probabilities(family.j_clean)
    J = int(rng.choice(family.j_clean + 1, p=p))
    stream = family.sampler.draw(rng, family.level_cost(J))
    est = family.level_from_stream(0, stream)
    if J > 0:
        diff = family.level_from_stream(J, stream) - family.level_from_stream(J - 1, stream)
        est = est + diff / p[J]
    if ledger is not None:
        ledger.charge_classical(phase, family.level_cost(J) * family.sampler.per_sample_classical_cost)
    return est
