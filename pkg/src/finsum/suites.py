"""Seeded test-instance builders with exact or certified optima."""
from __future__ import annotations

import numpy as np

from .objectives import HingeLoss, LeastSquares, QuadraticForms
from .problem import Case, ProblemInstance, ProximalTerm, evaluate
from . import reference


def ridge_instance(n: int = 16, d: int = 8, kappa: float = 10.0,
                   seed: int = 0) -> ProblemInstance:
    """Least squares + L2 with l/mu = kappa; optimum from the normal equations."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    y = A @ rng.standard_normal(d) + 0.5 * rng.standard_normal(n)
    obj = LeastSquares(A, y)
    mu = obj.smoothness / kappa
    inst = ProblemInstance(obj, ProximalTerm.l2(mu), Case.CASE1)
    x_star = reference.ridge_solution(obj, mu)
    f_star = evaluate(inst, x_star)
    delta = evaluate(inst, np.zeros(d)) - f_star
    return inst.replace(x_star=x_star, f_star=f_star, delta=delta,
                        radius=float(np.linalg.norm(x_star)))


def lasso_instance(n: int = 16, d: int = 8, lam1: float = 0.1, seed: int = 0,
                   iters: int = 10**6) -> ProblemInstance:
    """Least squares + L1 (Case 2); optimum from a long accelerated prox-gradient run."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    w = rng.standard_normal(d) * (rng.random(d) < 0.5)
    y = A @ w + 0.1 * rng.standard_normal(n)
    obj = LeastSquares(A, y)
    inst = ProblemInstance(obj, ProximalTerm.l1(lam1), Case.CASE2)
    x_star = reference.fista_lasso(obj, lam1, iters)
    f_star = evaluate(inst, x_star)
    delta = evaluate(inst, np.zeros(d)) - f_star
    return inst.replace(x_star=x_star, f_star=f_star, delta=delta,
                        radius=float(np.linalg.norm(x_star)))


def hinge_l2_instance(n: int = 8, d: int = 8, mu: float = 0.1, seed: int = 0,
                      iters: int = 10**6) -> ProblemInstance:
    """Hinge loss + L2 (Case 3).

    The optimum is bracketed: the dual value is a lower bound, and the best
    primal value among the subgradient reference and the dual-recovered point
    is an upper bound.
    """
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d)) / np.sqrt(d)
    labels = np.where(A @ rng.standard_normal(d) + 0.3 * rng.standard_normal(n) >= 0, 1.0, -1.0)
    obj = HingeLoss(A, labels)
    inst = ProblemInstance(obj, ProximalTerm.l2(mu), Case.CASE3)
    x_sub = reference.subgradient_hinge_l2(obj, mu, iters)
    x_dual, lower = reference.hinge_l2_dual(obj, mu)
    cands = [(evaluate(inst, x), x) for x in (x_sub, x_dual)]
    upper, x_star = min(cands, key=lambda t: t[0])
    lower = min(lower, upper)
    delta = evaluate(inst, np.zeros(d)) - lower
    return inst.replace(x_star=x_star, f_star=upper, f_star_interval=(lower, upper),
                        delta=delta, radius=float(np.linalg.norm(x_star)))


def indefinite_quadratic_instance(n: int = 16, d: int = 8, seed: int = 0,
                                  spread: float = 2.0) -> ProblemInstance:
    """Nonconvex finite sum of quadratics with indefinite H_i.

    The average Hessian is positive definite (eigenvalues in [0.5, 1]) so f
    is bounded below and f* is exact; the perturbations sum to zero and make
    every component indefinite.
    """
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    H_bar = Q @ np.diag(np.linspace(0.5, 1.0, d)) @ Q.T
    E = rng.standard_normal((n, d, d))
    E = 0.5 * (E + E.transpose(0, 2, 1))
    E -= E.mean(axis=0)
    E *= spread / np.abs(np.linalg.eigvalsh(E)).max()
    H = H_bar + E
    b = rng.standard_normal((n, d))
    obj = QuadraticForms(H, b)
    b_bar = b.mean(axis=0)
    x_star = -np.linalg.solve(H_bar, b_bar)
    f_star = 0.5 * float(b_bar @ x_star)
    inst = ProblemInstance(obj, ProximalTerm.zero(), Case.NONCONVEX,
                           delta=-f_star, x_star=x_star, f_star=f_star,
                           radius=float(np.linalg.norm(x_star)))
    return inst
