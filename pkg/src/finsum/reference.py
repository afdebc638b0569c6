"""High-accuracy reference solvers used as oracles for the optimizers."""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from .objectives import HingeLoss, LeastSquares
from .problem import soft_threshold


def ridge_solution(obj: LeastSquares, mu: float) -> np.ndarray:
    """Exact minimiser of mean 0.5(a_i.x - y_i)^2 + mu/2 ||x||^2."""
    G = obj.normal_matrix() + mu * np.eye(obj.d)
    return np.linalg.solve(G, obj.normal_rhs())


def fista_lasso(obj: LeastSquares, lam1: float, iters: int = 10**6,
                mu: float = 0.0) -> np.ndarray:
    """Accelerated proximal gradient on mean 0.5(a_i.x - y_i)^2 + lam1||x||_1
    (+ mu/2 ||x||^2)."""
    G = obj.normal_matrix()
    h = obj.normal_rhs()
    step = 1.0 / (np.linalg.eigvalsh(G)[-1] + mu)
    x = np.zeros(obj.d)
    v = x.copy()
    t = 1.0
    for _ in range(iters):
        x_new = soft_threshold(v - step * (G @ v - h + mu * v), step * lam1)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        v = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
    return x


def subgradient_hinge_l2(obj: HingeLoss, mu: float, iters: int = 10**6) -> np.ndarray:
    """Subgradient method with step 1/(mu t) and uniform suffix averaging
    over the second half of the run (strongly convex rate)."""
    A, y, n = obj.A, obj.y, obj.n
    x = np.zeros(obj.d)
    avg = np.zeros(obj.d)
    half = iters // 2
    for t in range(1, iters + 1):
        active = y * (A @ x) < 1.0
        g = -(y[active] @ A[active]) / n + mu * x
        x = x - g / (mu * t)
        if t > half:
            avg += x
    return avg / (iters - half)


def hinge_l2_dual(obj: HingeLoss, mu: float):
    """Solve the box-constrained dual of hinge + L2 with L-BFGS-B.

    Returns (x, dual_value); the dual value is a certified lower bound on the
    primal optimum by weak duality.
    """
    A, y, n = obj.A, obj.y, obj.n
    M = (y[:, None] * A)  # rows y_i a_i

    def neg_dual(alpha):
        w = M.T @ alpha
        val = alpha.sum() / n - (w @ w) / (2 * mu * n * n)
        grad = 1.0 / n - (M @ w) / (mu * n * n)
        return -val, -grad

    res = minimize(neg_dual, np.full(n, 0.5), jac=True, method="L-BFGS-B",
                   bounds=[(0.0, 1.0)] * n, options=dict(maxiter=10000, ftol=1e-16, gtol=1e-14))
    alpha = res.x
    x = M.T @ alpha / (mu * n)
    return x, -float(res.fun)
