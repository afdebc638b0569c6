"""Accelerated variance-reduced proximal method (Q-Katyusha) and the HOOD check."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .ledger import QueryLedger, ceil_tol
from .problem import (Case, ProblemInstance, UnsupportedInstanceError, as_vector,
                      evaluate, full_gradient, prox_step)
from .qvrg import qvrg_relative

# Condition numbers beyond this are treated as "mu is numerically zero".
MAX_CONDITION = 1e12
MAX_EPOCHS = 10**6


def batch_size(n: int, d: int) -> int:
    """ceil(n^(2/3) d^(-1/3)), shared by the batch b, the epoch length m and
    the SPIDER period."""
    return max(1, ceil_tol(n ** (2.0 / 3.0) * d ** (-1.0 / 3.0)))


@dataclass(frozen=True)
class KatyushaParams:
    S: int
    b: int
    m: int
    tau1: float
    tau2: float
    clamped: bool = False

    def __post_init__(self):
        if self.S < 1 or self.b < 1 or self.m < 1:
            raise ValueError("S, b and m must be positive integers")
        if not (0 < self.tau1 <= 1 and 0 < self.tau2 <= 1):
            raise ValueError("tau1 and tau2 must lie in (0, 1]")
        if self.tau1 + self.tau2 > 1 + 1e-15:
            raise ValueError("tau1 + tau2 must not exceed 1")

    def quantum_total(self, n: int, d: int) -> int:
        """Closed form S*n + S*m*ceil(sqrt(b*d)) of the modelled charge."""
        return self.S * n + self.S * self.m * ceil_tol(math.sqrt(self.b * d))


def epochs_for(ell: float, mu: float, b: int, m: int, log2_ratio: float) -> int:
    return max(1, math.ceil(5 * (1 + math.sqrt(ell / (b * m * mu))) * log2_ratio))


def katyusha_params(n: int, d: int, ell: float, mu: float, delta: float,
                    eps: float) -> KatyushaParams:
    for name, v in (("n", n), ("d", d), ("l", ell), ("mu", mu), ("delta", delta), ("eps", eps)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if ell / mu > MAX_CONDITION:
        raise UnsupportedInstanceError(
            f"l/mu = {ell / mu:.3g} exceeds {MAX_CONDITION:g}; mu is effectively 0")
    b = m = batch_size(n, d)
    tau2 = 1.0 / (2 * b)
    tau1 = tau2 * min(math.sqrt(8 * b * m * mu / (3 * ell)), 1.0)
    clamped = eps >= delta
    if clamped:
        warnings.warn("eps >= delta: epoch count clamps to 1", RuntimeWarning, stacklevel=2)
        S = 1
    else:
        S = epochs_for(ell, mu, b, m, math.log2(delta / eps))
    if S > MAX_EPOCHS:
        raise UnsupportedInstanceError(f"epoch count {S} exceeds {MAX_EPOCHS}")
    return KatyushaParams(S=S, b=b, m=m, tau1=tau1, tau2=tau2, clamped=clamped)


@dataclass
class EpochRecord:
    epoch: int
    value: float
    classical: int
    quantum_modeled: float


@dataclass
class Trajectory:
    records: List[EpochRecord] = field(default_factory=list)
    x_out: Optional[np.ndarray] = None
    params: Optional[KatyushaParams] = None
    f_out: float = float("nan")

    def errors(self, f_star: float) -> np.ndarray:
        return np.array([r.value - f_star for r in self.records])

    def to_csv(self, f_star: float = 0.0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "F_err", "classical", "quantum_modeled"])
        for r in self.records:
            w.writerow([r.epoch, repr(r.value - f_star), r.classical, r.quantum_modeled])
        return buf.getvalue()


def _require_case1(instance: ProblemInstance) -> None:
    if instance.case is not Case.CASE1 or not instance.mu > 0 or not instance.smoothness > 0:
        raise UnsupportedInstanceError("Q-Katyusha needs a Case1 instance (l > 0, mu > 0)")


def run_q_katyusha(instance: ProblemInstance, params: KatyushaParams,
                   rng: np.random.Generator, ledger: Optional[QueryLedger] = None,
                   x0=None, gradient_mode: str = "minibatch",
                   record: bool = True) -> Trajectory:
    """Run S epochs of m inner steps and return the weighted output point.

    ``gradient_mode`` selects the gradient-difference estimator: "minibatch"
    (default), "mlmc", or "exact" (zero variance, deterministic run).
    """
    _require_case1(instance)
    ledger = ledger if ledger is not None else QueryLedger()
    psi, ell = instance.proximal, instance.smoothness
    S, b, m, t1, t2 = params.S, params.b, params.m, params.tau1, params.tau2
    t3 = 1.0 - t1 - t2
    x_tilde = np.zeros(instance.d) if x0 is None else as_vector(x0, instance.d).copy()
    y = x_tilde.copy()
    z = x_tilde.copy()
    traj = Trajectory(params=params)
    if record:
        traj.records.append(EpochRecord(0, evaluate(instance, x_tilde), *ledger.snapshot()))
    for s in range(S):
        gamma = full_gradient(instance, x_tilde, ledger)
        y_sum = np.zeros(instance.d)
        for _ in range(m):
            x = t1 * z + t2 * x_tilde + t3 * y
            g = gamma + qvrg_relative(instance, x, x_tilde, b, rng, ledger, mode=gradient_mode)
            z = prox_step(psi, 3 * t1 * ell, z, g)
            y = prox_step(psi, 3 * ell, x, g)
            y_sum += y
        x_tilde = y_sum / m
        if record:
            traj.records.append(EpochRecord(s + 1, evaluate(instance, x_tilde), *ledger.snapshot()))
    w_tilde = t2 * m
    traj.x_out = (w_tilde * x_tilde + t3 * y) / (w_tilde + t3)
    traj.f_out = evaluate(instance, traj.x_out)
    return traj


def katyusha_solve(instance: ProblemInstance, eps: Optional[float] = None,
                   seed: int = 0, ledger: Optional[QueryLedger] = None, x0=None,
                   gradient_mode: str = "minibatch") -> Trajectory:
    """Convenience wrapper: default parameters with eps defaulting to 1e-6 * delta."""
    _require_case1(instance)
    if not instance.delta > 0:
        raise ValueError("instance needs a positive delta")
    eps = 1e-6 * instance.delta if eps is None else eps
    params = katyusha_params(instance.n, instance.d, instance.smoothness, instance.mu,
                             instance.delta, eps)
    return run_q_katyusha(instance, params, np.random.default_rng(seed), ledger, x0,
                          gradient_mode)


# -- HOOD --------------------------------------------------------------------

HoodSolver = Callable[[ProblemInstance, np.ndarray, np.random.Generator, QueryLedger],
                      np.ndarray]


def hood_params(instance: ProblemInstance, log2_ratio: float = 2.0) -> KatyushaParams:
    """Parameters for a run that targets gap/2^log2_ratio from any start.

    With eps = gap/4 the ratio delta/eps is 4 whatever the gap is, so the
    epoch count does not depend on the (unknown) starting gap.
    """
    _require_case1(instance)
    ell, mu = instance.smoothness, instance.mu
    if ell / mu > MAX_CONDITION:
        raise UnsupportedInstanceError(
            f"l/mu = {ell / mu:.3g} exceeds {MAX_CONDITION:g}; mu is effectively 0")
    p = katyusha_params(instance.n, instance.d, ell, mu, 2.0**log2_ratio, 1.0)
    return p


def katyusha_hood_solver(gradient_mode: str = "minibatch",
                         log2_ratio: float = 2.0) -> HoodSolver:
    """A HOOD solver: one Q-Katyusha run that quarters the gap (by default)."""

    def solve(instance, x0, rng, ledger):
        params = hood_params(instance, log2_ratio)
        return run_q_katyusha(instance, params, rng, ledger, x0, gradient_mode,
                              record=False).x_out

    return solve


@dataclass
class HoodReport:
    passed: bool
    gap: float
    mean_error: float
    errors: Tuple[float, ...]
    tolerance: float = 1.1


def hood_report(instance: ProblemInstance, x0=None, ledger: Optional[QueryLedger] = None,
                seeds: Sequence[int] = tuple(range(20)), tolerance: float = 1.1,
                gradient_mode: str = "minibatch") -> HoodReport:
    if not instance.has_known_optimum:
        raise ValueError("HOOD check needs a known optimum (exact or certified interval)")
    _require_case1(instance)
    if len(seeds) < 20:
        raise ValueError("HOOD check averages over at least 20 seeds")
    x0 = np.zeros(instance.d) if x0 is None else as_vector(x0, instance.d)
    f_star = instance.optimum_lower()
    gap = evaluate(instance, x0) - f_star
    params = hood_params(instance)
    if gap <= 0:
        return HoodReport(True, gap, 0.0, (), tolerance)
    errs = []
    for seed in seeds:
        run_ledger = QueryLedger()
        traj = run_q_katyusha(instance, params, np.random.default_rng(seed), run_ledger,
                              x0, gradient_mode, record=False)
        if ledger is not None:
            ledger.merge(run_ledger)
        errs.append(traj.f_out - f_star)
    mean = float(np.mean(errs))
    return HoodReport(mean <= gap / 4 * tolerance, gap, mean, tuple(errs), tolerance)


def check_hood(instance: ProblemInstance, x0=None, ledger: Optional[QueryLedger] = None,
               **kw) -> bool:
    """True when the mean error after one quarter-run is within gap/4 * 1.1."""
    return hood_report(instance, x0, ledger, **kw).passed
