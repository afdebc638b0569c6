"""Black-box reductions from Cases 2-4 to a HOOD solver for Case 1.

* ``adapt_reg`` (Case 2): add (mu_s/2)||x||^2 with mu_s = mu0/2^s, mu0 = delta/R^2.
* ``adapt_smooth`` (Case 3): replace each f_i by its Moreau envelope at
  lam_s = lam0/2^s, lam0 = delta/L^2, which is (2^s/lam0)-smooth.
* ``adapt_both`` (Case 4): both schedules at once.

Each stage warm-starts from the previous stage's output and runs the HOOD
solver once.  The stage count is max(1, ceil(log2(delta/eps))).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .katyusha import HoodSolver, katyusha_hood_solver
from .ledger import QueryLedger
from .objectives import MoreauEnvelope
from .problem import Case, ProblemInstance, UnsupportedInstanceError, as_vector


@dataclass
class StageRecord:
    stage: int
    mu: float
    smoothness: float
    classical: int
    quantum_modeled: float


@dataclass
class ReductionResult:
    x: np.ndarray
    stages: List[StageRecord] = field(default_factory=list)

    @property
    def stage_costs(self) -> List[float]:
        return [s.quantum_modeled for s in self.stages]


def reduction_stages(delta: float, eps: float) -> int:
    if not (delta > 0 and eps > 0):
        raise ValueError("delta and eps must be positive")
    return max(1, math.ceil(math.log2(delta / eps)))


def _check_case(instance: ProblemInstance, case: Case) -> None:
    if instance.case is not case:
        raise UnsupportedInstanceError(f"expected a {case.value} instance, got {instance.case.value}")
    if not instance.delta > 0:
        raise ValueError("reduction needs a positive delta (bound on F(0) - F*)")


def _run_stages(instance, eps, solver, rng, ledger, x0, reg: bool, smooth: bool):
    delta = instance.delta
    S = reduction_stages(delta, eps)
    mu0 = lam0 = 0.0
    if reg:
        if not instance.radius > 0:
            raise ValueError("regularisation schedule needs a positive radius R")
        mu0 = delta / instance.radius**2
    if smooth:
        L = instance.objective.lipschitz
        if not L > 0:
            raise UnsupportedInstanceError("smoothing schedule needs Lipschitz components")
        if not instance.objective.has_prox:
            raise UnsupportedInstanceError(
                f"{type(instance.objective).__name__} supplies no component prox")
        lam0 = delta / L**2
    solver = solver if solver is not None else katyusha_hood_solver()
    ledger = ledger if ledger is not None else QueryLedger()
    x = np.zeros(instance.d) if x0 is None else as_vector(x0, instance.d).copy()
    result = ReductionResult(x)
    for s in range(S):
        proximal = instance.proximal.with_l2(mu0 / 2**s) if reg else instance.proximal
        objective = MoreauEnvelope(instance.objective, lam0 / 2**s) if smooth else instance.objective
        stage = ProblemInstance(objective, proximal, Case.CASE1)
        before = ledger.snapshot()
        x = solver(stage, x, rng, ledger)
        after = ledger.snapshot()
        result.stages.append(StageRecord(s, proximal.mu, objective.smoothness,
                                         after[0] - before[0], after[1] - before[1]))
    result.x = x
    return result


def adapt_reg(instance: ProblemInstance, eps: float, hood_solver: Optional[HoodSolver] = None,
              rng: Optional[np.random.Generator] = None, ledger: Optional[QueryLedger] = None,
              x0=None) -> ReductionResult:
    _check_case(instance, Case.CASE2)
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run_stages(instance, eps, hood_solver, rng, ledger, x0, reg=True, smooth=False)


def adapt_smooth(instance: ProblemInstance, eps: float, hood_solver: Optional[HoodSolver] = None,
                 rng: Optional[np.random.Generator] = None, ledger: Optional[QueryLedger] = None,
                 x0=None) -> ReductionResult:
    _check_case(instance, Case.CASE3)
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run_stages(instance, eps, hood_solver, rng, ledger, x0, reg=False, smooth=True)


def adapt_both(instance: ProblemInstance, eps: float, hood_solver: Optional[HoodSolver] = None,
               rng: Optional[np.random.Generator] = None, ledger: Optional[QueryLedger] = None,
               x0=None) -> ReductionResult:
    _check_case(instance, Case.CASE4)
    rng = rng if rng is not None else np.random.default_rng(0)
    return _run_stages(instance, eps, hood_solver, rng, ledger, x0, reg=True, smooth=True)
