"""Concrete component families used by the solvers, tests and harness."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .problem import FiniteSumObjective, soft_threshold


class ZeroObjective(FiniteSumObjective):
    """f_i == const.  ``smoothness`` and ``lipschitz`` are nominal (valid) bounds."""

    def __init__(self, n: int, d: int, smoothness: float = 1.0, constant: float = 0.0,
                 lipschitz: float = 0.0):
        self.n, self.d = n, d
        self.smoothness = smoothness
        self.lipschitz = lipschitz
        self.constant = constant

    def value(self, i, x):
        return self.constant

    def gradient(self, i, x):
        return np.zeros(self.d)

    def values(self, idx, x):
        return np.full(len(idx), self.constant, dtype=float)

    def gradients(self, idx, x):
        return np.zeros((len(idx), self.d))

    def prox(self, i, gamma, x):
        return np.array(x, dtype=float)


class LinearObjective(FiniteSumObjective):
    """f_i(x) = <a_i, x>."""

    def __init__(self, A, smoothness: float = 0.0):
        self.A = np.asarray(A, dtype=float)
        self.n, self.d = self.A.shape
        self.smoothness = smoothness
        self.lipschitz = float(np.linalg.norm(self.A, axis=1).max())

    def value(self, i, x):
        return float(self.A[i] @ x)

    def gradient(self, i, x):
        return self.A[i].copy()

    def values(self, idx, x):
        return self.A[np.asarray(idx, dtype=int)] @ x

    def gradients(self, idx, x):
        return self.A[np.asarray(idx, dtype=int)].copy()


class QuadraticForms(FiniteSumObjective):
    """f_i(x) = 0.5 <x, H_i x> + <b_i, x> + c_i with symmetric H_i."""

    def __init__(self, H, b, c=None):
        self.H = np.asarray(H, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.n, self.d = self.b.shape
        self.c = np.zeros(self.n) if c is None else np.asarray(c, dtype=float)
        self.smoothness = float(max(np.abs(np.linalg.eigvalsh(h)).max() for h in self.H))
        self.lipschitz = 0.0

    def value(self, i, x):
        return float(0.5 * x @ self.H[i] @ x + self.b[i] @ x + self.c[i])

    def gradient(self, i, x):
        return self.H[i] @ x + self.b[i]

    def values(self, idx, x):
        idx = np.asarray(idx, dtype=int)
        Hx = self.H[idx] @ x
        return 0.5 * Hx @ x + self.b[idx] @ x + self.c[idx]

    def gradients(self, idx, x):
        idx = np.asarray(idx, dtype=int)
        return self.H[idx] @ x + self.b[idx]

    def mean_hessian(self) -> np.ndarray:
        return self.H.mean(axis=0)


class CenteredQuadratics(QuadraticForms):
    """f_i(x) = 0.5 ||x - c_i||^2."""

    def __init__(self, centers):
        centers = np.asarray(centers, dtype=float)
        n, d = centers.shape
        H = np.broadcast_to(np.eye(d), (n, d, d)).copy()
        super().__init__(H, -centers, 0.5 * np.einsum("ij,ij->i", centers, centers))
        self.centers = centers


class _LinearModelLoss(FiniteSumObjective):
    """f_i(x) = h_i(<a_i, x>) for a scalar convex loss h_i."""

    def __init__(self, A, y):
        self.A = np.asarray(A, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.n, self.d = self.A.shape
        self.row_sq = np.einsum("ij,ij->i", self.A, self.A)

    def _h(self, t, y):
        raise NotImplementedError

    def _dh(self, t, y):
        raise NotImplementedError

    def value(self, i, x):
        return float(self._h(self.A[i] @ x, self.y[i]))

    def gradient(self, i, x):
        return self._dh(self.A[i] @ x, self.y[i]) * self.A[i]

    def values(self, idx, x):
        idx = np.asarray(idx, dtype=int)
        return self._h(self.A[idx] @ x, self.y[idx])

    def gradients(self, idx, x):
        idx = np.asarray(idx, dtype=int)
        A = self.A[idx]
        return self._dh(A @ x, self.y[idx])[:, None] * A


class LeastSquares(_LinearModelLoss):
    """f_i(x) = 0.5 (<a_i, x> - y_i)^2, smoothness max ||a_i||^2."""

    def __init__(self, A, y):
        super().__init__(A, y)
        self.smoothness = float(self.row_sq.max())
        self.lipschitz = 0.0

    def _h(self, t, y):
        return 0.5 * (t - y) ** 2

    def _dh(self, t, y):
        return t - y

    def prox(self, i, gamma, x):
        a, s = self.A[i], self.row_sq[i]
        t = a @ x
        t_new = (t + gamma * s * self.y[i]) / (1 + gamma * s)
        return x + a * (t_new - t) / s if s > 0 else x.copy()

    def normal_matrix(self) -> np.ndarray:
        return self.A.T @ self.A / self.n

    def normal_rhs(self) -> np.ndarray:
        return self.A.T @ self.y / self.n


class AbsoluteLoss(_LinearModelLoss):
    """f_i(x) = |<a_i, x> - y_i|, Lipschitz with constant max ||a_i||."""

    def __init__(self, A, y):
        super().__init__(A, y)
        self.smoothness = 0.0
        self.lipschitz = float(np.sqrt(self.row_sq.max()))

    def _h(self, t, y):
        return np.abs(t - y)

    def _dh(self, t, y):
        return np.sign(t - y)

    def prox(self, i, gamma, x):
        a, s = self.A[i], self.row_sq[i]
        t = a @ x
        p = self.y[i] + soft_threshold(t - self.y[i], gamma * s)
        return x + a * (p - t) / s


class HingeLoss(_LinearModelLoss):
    """f_i(x) = max(0, 1 - y_i <a_i, x>) with labels y_i in {-1, +1}."""

    def __init__(self, A, y):
        super().__init__(A, y)
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("hinge labels must be +-1")
        self.smoothness = 0.0
        self.lipschitz = float(np.sqrt(self.row_sq.max()))

    def _h(self, t, y):
        return np.maximum(0.0, 1.0 - y * t)

    def _dh(self, t, y):
        return np.where(y * t < 1.0, -y, 0.0)

    def prox(self, i, gamma, x):
        a, s, y = self.A[i], self.row_sq[i], self.y[i]
        t = a @ x
        u, g = y * t, gamma * s
        # prox of g*max(0, 1-u) in the margin coordinate u
        if u >= 1.0:
            pu = u
        elif u <= 1.0 - g:
            pu = u + g
        else:
            pu = 1.0
        return x + a * (y * pu - t) / s


class MoreauEnvelope(FiniteSumObjective):
    """Componentwise Moreau envelope f_i^lam, a (1/lam)-smooth surrogate.

    f_i^lam(x) = f_i(p) + ||x - p||^2 / (2 lam) with p = prox_{lam f_i}(x);
    its gradient is (x - p) / lam.
    """

    def __init__(self, base: FiniteSumObjective, lam: float):
        if not base.has_prox:
            raise ValueError(f"{type(base).__name__} supplies no component prox")
        if not lam > 0:
            raise ValueError("envelope parameter must be positive")
        self.base, self.lam = base, lam
        self.n, self.d = base.n, base.d
        self.smoothness = 1.0 / lam
        self.lipschitz = base.lipschitz

    def value(self, i, x):
        p = self.base.prox(i, self.lam, x)
        r = x - p
        return self.base.value(i, p) + float(r @ r) / (2 * self.lam)

    def gradient(self, i, x):
        return (x - self.base.prox(i, self.lam, x)) / self.lam


def moreau_gradient(objective: FiniteSumObjective, i: int, lam: float, x) -> np.ndarray:
    """Gradient of the Moreau envelope of component i at x."""
    if not objective.has_prox:
        raise ValueError(f"{type(objective).__name__} supplies no component prox")
    x = np.asarray(x, dtype=float)
    return (x - objective.prox(i, lam, x)) / lam


class ScaledObjective(FiniteSumObjective):
    """Wraps components as  scale * f_i(x / radius)."""

    def __init__(self, base: FiniteSumObjective, scale: float = 1.0, radius: float = 1.0):
        self.base, self.scale, self.radius = base, scale, radius
        self.n, self.d = base.n, base.d
        self.smoothness = base.smoothness * scale / radius**2
        self.lipschitz = base.lipschitz * scale / radius

    def value(self, i, x):
        return self.scale * self.base.value(i, x / self.radius)

    def gradient(self, i, x):
        return self.scale / self.radius * self.base.gradient(i, x / self.radius)

    def values(self, idx: Sequence[int], x):
        return self.scale * self.base.values(idx, x / self.radius)

    def gradients(self, idx: Sequence[int], x):
        return self.scale / self.radius * self.base.gradients(idx, x / self.radius)
