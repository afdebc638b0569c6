"""Finite-sum objectives, proximal terms and the exact proximal step.

The objective is F(x) = (1/n) sum_i f_i(x) + psi(x).  Component oracles are
exposed one index at a time (``value``/``gradient``) and, for speed, in
batches (``values``/``gradients``).  Batched calls are a convenience of the
simulator only; cost accounting is always per component.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class Case(str, enum.Enum):
    CASE1 = "Case1"  # smooth, psi strongly convex
    CASE2 = "Case2"  # smooth, psi convex
    CASE3 = "Case3"  # Lipschitz, psi strongly convex
    CASE4 = "Case4"  # Lipschitz, psi convex
    NONCONVEX = "Nonconvex"


class UnsupportedInstanceError(ValueError):
    """Raised when an algorithm is handed an instance outside its case."""


def as_vector(x, d: Optional[int] = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {x.shape}")
    if d is not None and x.shape[0] != d:
        raise ValueError(f"dimension mismatch: expected {d}, got {x.shape[0]}")
    return x


def _check_finite(v: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise FloatingPointError(f"non-finite entries in {what}")
    return v


class FiniteSumObjective:
    """Base class for ``f(x) = (1/n) sum_i f_i(x)``.

    Subclasses implement ``value`` and ``gradient``; the batched versions
    loop by default and are overridden where a vectorised form exists.
    ``smoothness`` is the per-component constant l (0 means not smooth) and
    ``lipschitz`` the per-component constant L (0 means not Lipschitz).
    """

    n: int
    d: int
    smoothness: float = 0.0
    lipschitz: float = 0.0

    def value(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prox(self, i: int, gamma: float, x: np.ndarray) -> np.ndarray:
        """Return argmin_u gamma*f_i(u) + 0.5*||u - x||^2."""
        raise NotImplementedError(f"{type(self).__name__} has no component prox")

    @property
    def has_prox(self) -> bool:
        return type(self).prox is not FiniteSumObjective.prox

    def values(self, idx: Sequence[int], x: np.ndarray) -> np.ndarray:
        return np.array([self.value(int(i), x) for i in idx])

    def gradients(self, idx: Sequence[int], x: np.ndarray) -> np.ndarray:
        idx = np.asarray(idx, dtype=int)
        if idx.size == 0:
            return np.zeros((0, self.d))
        return np.stack([self.gradient(int(i), x) for i in idx])

    def mean_value(self, x: np.ndarray) -> float:
        return float(np.mean(self.values(np.arange(self.n), x)))

    def mean_gradient(self, x: np.ndarray) -> np.ndarray:
        return self.gradients(np.arange(self.n), x).mean(axis=0)


@dataclass(frozen=True)
class ProximalTerm:
    """psi(x) = (mu/2)||x||^2 + lam1*||x||_1.

    The three kinds named in the problem statement are the special cases
    Zero (both 0), L2 (lam1 = 0) and L1 (mu = 0).  Both parts together give
    the elastic net, which the regularisation reductions need when they add
    an L2 term to a Lasso instance.
    """

    mu: float = 0.0
    lam1: float = 0.0

    def __post_init__(self):
        if self.mu < 0 or self.lam1 < 0:
            raise ValueError("proximal weights must be non-negative")

    @classmethod
    def zero(cls) -> "ProximalTerm":
        return cls()

    @classmethod
    def l2(cls, mu: float) -> "ProximalTerm":
        if mu <= 0:
            raise ValueError("L2 proximal term needs mu > 0")
        return cls(mu=mu)

    @classmethod
    def l1(cls, lam1: float) -> "ProximalTerm":
        if lam1 <= 0:
            raise ValueError("L1 proximal term needs lam1 > 0")
        return cls(lam1=lam1)

    @property
    def kind(self) -> str:
        if self.mu == 0 and self.lam1 == 0:
            return "Zero"
        if self.lam1 == 0:
            return "L2"
        if self.mu == 0:
            return "L1"
        return "ElasticNet"

    @property
    def strong_convexity(self) -> float:
        return self.mu

    def with_l2(self, extra_mu: float) -> "ProximalTerm":
        return ProximalTerm(mu=self.mu + extra_mu, lam1=self.lam1)

    def value(self, x: np.ndarray) -> float:
        return 0.5 * self.mu * float(x @ x) + self.lam1 * float(np.abs(x).sum())

    def subgradient_residual(self, z: np.ndarray, r: np.ndarray) -> float:
        """Distance from -r to the subdifferential of psi at z (inf-norm)."""
        s = -r - self.mu * z
        if self.lam1 == 0:
            return float(np.max(np.abs(s), initial=0.0))
        on = z != 0
        res_on = np.abs(s[on] - self.lam1 * np.sign(z[on]))
        res_off = np.maximum(np.abs(s[~on]) - self.lam1, 0.0)
        return float(max(np.max(res_on, initial=0.0), np.max(res_off, initial=0.0)))


def soft_threshold(v: np.ndarray, level) -> np.ndarray:
    """sign(v) * max(|v| - level, 0), written as v - clip(v) for speed."""
    return v - np.clip(v, -level, level)


def prox_step(proximal: ProximalTerm, a: float, anchor, g) -> np.ndarray:
    """Exact minimiser of (a/2)||z - anchor||^2 + <g, z> + psi(z)."""
    if not a > 0:
        raise ValueError(f"prox_step needs a > 0, got {a}")
    anchor = as_vector(anchor)
    g = as_vector(g, anchor.shape[0])
    v = a * anchor - g
    if proximal.lam1 > 0:
        v = soft_threshold(v, proximal.lam1)
    return _check_finite(v / (a + proximal.mu), "prox_step output")


@dataclass
class ProblemInstance:
    objective: FiniteSumObjective
    proximal: ProximalTerm
    case: Case
    delta: float = 0.0
    radius: float = 0.0
    x_star: Optional[np.ndarray] = None
    f_star: Optional[float] = None
    f_star_interval: Optional[tuple] = None

    def __post_init__(self):
        self.case = Case(self.case)
        ell, lip = self.objective.smoothness, self.objective.lipschitz
        mu = self.proximal.mu
        ok = {
            Case.CASE1: ell > 0 and mu > 0,
            Case.CASE2: ell > 0 and mu == 0,
            Case.CASE3: lip > 0 and mu > 0,
            Case.CASE4: lip > 0 and mu == 0,
            Case.NONCONVEX: ell > 0,
        }[self.case]
        if not ok:
            raise ValueError(
                f"{self.case.value} inconsistent with l={ell}, L={lip}, mu={mu}")
        if self.delta < 0 or self.radius < 0:
            raise ValueError("delta and radius must be non-negative")

    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def d(self) -> int:
        return self.objective.d

    @property
    def smoothness(self) -> float:
        return self.objective.smoothness

    @property
    def mu(self) -> float:
        return self.proximal.mu

    @property
    def has_known_optimum(self) -> bool:
        return self.f_star is not None or self.f_star_interval is not None

    def optimum_lower(self) -> float:
        if self.f_star is not None:
            return self.f_star
        if self.f_star_interval is not None:
            return self.f_star_interval[0]
        raise ValueError("instance carries no known optimum")

    def replace(self, **changes) -> "ProblemInstance":
        fields = dict(objective=self.objective, proximal=self.proximal,
                      case=self.case, delta=self.delta, radius=self.radius,
                      x_star=self.x_star, f_star=self.f_star,
                      f_star_interval=self.f_star_interval)
        fields.update(changes)
        return ProblemInstance(**fields)


def evaluate(instance: ProblemInstance, x) -> float:
    """F(x) = (1/n) sum_i f_i(x) + psi(x)."""
    x = as_vector(x, instance.d)
    val = instance.objective.mean_value(x) + instance.proximal.value(x)
    if not np.isfinite(val):
        raise FloatingPointError("objective value is not finite")
    return float(val)


def full_gradient(instance: ProblemInstance, x, ledger=None,
                  phase: str = "full_gradient") -> np.ndarray:
    """Average component gradient; charges n classical and n quantum queries.

    A full pass queries the oracle without superposition, so its modelled
    quantum cost equals the classical count.
    """
    x = as_vector(x, instance.d)
    g = instance.objective.mean_gradient(x)
    if ledger is not None:
        ledger.charge_full_pass(phase, instance.n)
    return _check_finite(g, "full gradient")
