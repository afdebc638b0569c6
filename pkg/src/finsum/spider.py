"""FS-Q-SPIDER: normalized steps on a path-integrated gradient estimate.

Finds an expected eps-critical point of a smooth (possibly nonconvex) finite
sum with psi = 0.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .katyusha import batch_size
from .ledger import QueryLedger, ceil_tol
from .problem import ProblemInstance, UnsupportedInstanceError, full_gradient
from .qvrg import qvrg


@dataclass(frozen=True)
class SpiderParams:
    period_q: int
    eps_hat: float
    T: int

    @property
    def sigma_hat(self) -> float:
        """Target RMSE of each incremental estimate, eps_hat / sqrt(2q)."""
        return self.eps_hat / math.sqrt(2 * self.period_q)

    def step(self, ell: float) -> float:
        return self.eps_hat / (2 * ell)


def spider_params(n: int, d: int, ell: float, delta: float, eps: float) -> SpiderParams:
    for name, v in (("n", n), ("d", d), ("l", ell), ("delta", delta), ("eps", eps)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return SpiderParams(period_q=batch_size(n, d), eps_hat=eps / 5,
                        T=max(1, ceil_tol(4 * ell * delta / eps**2)))


@dataclass
class SpiderStep:
    t: int
    v_norm: float
    reset: bool
    classical: int
    quantum_modeled: float


@dataclass
class SpiderResult:
    x: np.ndarray
    early_exit: bool
    t_exit: int
    steps: List[SpiderStep] = field(default_factory=list)
    qvrg_per_block: List[int] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "v_norm", "reset", "classical", "quantum_modeled"])
        for s in self.steps:
            w.writerow([s.t, repr(s.v_norm), int(s.reset), s.classical, s.quantum_modeled])
        return buf.getvalue()


def run_fs_q_spider(instance: ProblemInstance, params: SpiderParams,
                    rng: np.random.Generator, ledger: Optional[QueryLedger] = None,
                    record: bool = False) -> SpiderResult:
    """Run from x0 = 0 for up to T iterations.

    Returns early at the first t with ||v_t|| <= eps_hat; otherwise returns an
    iterate drawn uniformly from x_0..x_{T-1}.
    """
    if instance.proximal.kind != "Zero":
        raise UnsupportedInstanceError("FS-Q-SPIDER requires psi = 0")
    ell = instance.smoothness
    if not ell > 0:
        raise UnsupportedInstanceError("FS-Q-SPIDER needs a smooth instance (l > 0)")
    ledger = ledger if ledger is not None else QueryLedger()
    q, eps_hat, T = params.period_q, params.eps_hat, params.T
    sigma_hat = params.sigma_hat
    step = params.step(ell)
    x = np.zeros(instance.d)
    x_prev = x
    v = None
    iterates = []
    res = SpiderResult(x, False, -1)
    for t in range(T):
        if t % q == 0:
            v = full_gradient(instance, x, ledger)
            res.qvrg_per_block.append(0)
        else:
            v = v + qvrg(instance, x, x_prev, sigma_hat, rng, ledger)
            res.qvrg_per_block[-1] += 1
        vn = float(np.linalg.norm(v))
        if record:
            res.steps.append(SpiderStep(t, vn, t % q == 0, *ledger.snapshot()))
        if vn <= eps_hat:
            res.x, res.early_exit, res.t_exit = x, True, t
            return res
        iterates.append(x)
        x_prev, x = x, x - step * v / vn
    res.x = iterates[int(rng.integers(T))]
    res.t_exit = T
    return res


def block_cost_closed_form(n: int, d: int, q: int, qvrg_calls: int) -> int:
    """Modelled charge of one period: n for the reset plus a fixed charge
    per incremental call.

    Each incremental call has sigma = l*||x_t - x_{t-1}|| = eps_hat/2 and
    sigma_hat = eps_hat/sqrt(2q), so its charge is ceil(sqrt(d q / 2)).
    """
    return n + qvrg_calls * ceil_tol(math.sqrt(d * q / 2))
