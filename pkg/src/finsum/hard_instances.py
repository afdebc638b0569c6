"""Lower-bound hard instances built from chains of orthonormal vectors.

Every instance has n/2 blocks.  Block i owns orthonormal vectors
v_{i,0..k}; writing u_j = <x, v_{i,j}>, the two components of block i are
functions of the chain differences u_{r-1} - u_r (even r in the first
component, odd r in the second) plus a head term on u_0 and, for the smooth
cases, a tail term on u_k.  The helper functions hide each difference inside
a dead zone of width c.

Instances are generated in normalised units (l = 1, R = 1, L = 1) and exposed
as  scale * F_unit(x / R).

The optimum is never assumed known exactly for the phi-based cases: checks
use the certified interval [F_lower, F_upper].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .problem import Case, FiniteSumObjective, ProblemInstance, ProximalTerm, as_vector


# -- helper functions ----------------------------------------------------------

def phi(z, c: float):
    """Smooth helper: 0 on |z| <= c, 2(|z|-c)^2 up to 2c, z^2 - 2c^2 beyond.

    Returns (value, derivative), vectorised over z.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    mid = (a > c) & (a <= 2 * c)
    far = a > 2 * c
    val = np.where(far, z * z - 2 * c * c, np.where(mid, 2 * (a - c) ** 2, 0.0))
    der = np.where(far, 2 * z, np.where(mid, 4 * (a - c) * np.sign(z), 0.0))
    return val, der


def chi(z, c: float):
    """Lipschitz helper max(0, |z| - c); derivative 0 inside [-c, c]."""
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    val = np.maximum(0.0, a - c)
    der = np.where(a > c, np.sign(z), 0.0)
    return val, der


@dataclass(frozen=True)
class HelperFn:
    kind: str  # "Phi" or "Chi"
    c: float

    def __post_init__(self):
        if self.kind not in ("Phi", "Chi"):
            raise ValueError(f"unknown helper kind {self.kind!r}")
        if not self.c > 0:
            raise ValueError("helper width c must be positive")

    def __call__(self, z):
        return (phi if self.kind == "Phi" else chi)(z, self.c)


def helper_eval(fn: HelperFn, z: float) -> Tuple[float, float]:
    v, d = fn(z)
    return float(v), float(d)


# -- parameters -------------------------------------------------------------

class HardInstanceError(ValueError):
    """A generation precondition failed."""


def _log(x: float, base: str) -> float:
    return math.log2(x) if base == "2" else math.log(x)


def case1_parameters(n: int, mu: float, delta: float, eps: float, N: int = 1,
                     log_base: str = "2") -> Dict[str, float]:
    """Strongly convex smooth case, normalised to l = 1."""
    mu_t = n * mu
    if not 0 < mu_t < 1:
        raise HardInstanceError(f"Case 1 needs 0 < n*mu < 1, got n*mu = {mu_t}")
    if not eps <= 4.0 / 3.0 * mu * delta:
        raise HardInstanceError(
            f"Case 1 needs eps <= (4/3) mu delta / l = {4.0 / 3.0 * mu * delta:.6g}, got {eps}")
    Q = 0.5 * (1.0 / mu_t - 1.0) + 1.0
    sq = math.sqrt(Q)
    q = (sq - 1) / (sq + 1)
    arg = delta / (n * eps * (sq - 1) ** 2)
    k = math.floor((sq - 1) / 4 * _log(arg, log_base)) - 1 if arg > 0 else -1
    if k < 1:
        raise HardInstanceError(f"Case 1 chain length k = {k} < 1; decrease eps")
    C = math.sqrt(delta / mu) * 4 / (sq - 1)
    c = min(1 / math.sqrt(N), math.sqrt(8 * n * eps / ((1 - mu_t) * (k + 1))), C * q ** (k + 1))
    return dict(k=k, C=C, c=c, zeta=1 - q, mu_tilde=mu_t, Q=Q, q_ratio=q, b_offset=0.0)


def case2_parameters(n: int, eps: float, N: int = 1) -> Dict[str, float]:
    """Convex smooth case, normalised to l = R = 1."""
    if not eps < 1.0 / (4096 * n):
        raise HardInstanceError(f"Case 2 needs eps < l R^2 / (4096 n) = {1 / (4096 * n):.6g}")
    k = math.floor(1 / (16 * math.sqrt(eps * n))) - 1
    if k < 3:
        raise HardInstanceError(f"Case 2 needs chain length k >= 3, got {k}")
    C = math.sqrt(6 / (n * k))
    c = min(1 / math.sqrt(N), (2 - math.sqrt(3)) * C, 8 * math.sqrt(eps / k))
    return dict(k=k, C=C, c=c, zeta=1.0, mu_tilde=0.0, Q=0.0, q_ratio=0.0, b_offset=0.0)


def case4_parameters(n: int, eps: float, N: int = 1) -> Dict[str, float]:
    """Convex Lipschitz case, normalised to L = R = 1."""
    if not eps < 3 / (10 * math.sqrt(n)):
        raise HardInstanceError(f"Case 4 needs eps < 3 L R / (10 sqrt n) = {3 / (10 * math.sqrt(n)):.6g}")
    k = math.floor(1 / (10 * eps * math.sqrt(n)))
    if k < 1:
        raise HardInstanceError(f"Case 4 chain length k = {k} < 1")
    c = min(1 / math.sqrt(N), eps / math.sqrt(k))
    b = math.sqrt(2 / (n * (k + 1)))
    return dict(k=k, C=0.0, c=c, zeta=0.0, mu_tilde=0.0, Q=0.0, q_ratio=0.0, b_offset=b)


def orthonormal_blocks(blocks: int, k: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(blocks, k+1, d) array of globally orthonormal vectors."""
    m = blocks * (k + 1)
    if d < m:
        raise HardInstanceError(f"dimension d = {d} too small; need d >= {m}")
    Qm, R = np.linalg.qr(rng.standard_normal((d, m)))
    Qm = Qm * np.sign(np.diag(R))  # fixes the sign convention of the factorisation
    return Qm.T.reshape(blocks, k + 1, d)


# -- the instance --------------------------------------------------------------

class HardInstance(FiniteSumObjective):
    """Hard finite sum with n components; component 2i+p is f_{i,p+1}."""

    def __init__(self, case: int, n: int, d: int, eps: float, params: Dict[str, float],
                 V: np.ndarray, mu: float = 0.0, scale: float = 1.0, radius: float = 1.0,
                 query_budget: int = 1, seed: Optional[int] = None):
        self.case, self.n, self.d, self.eps = case, n, d, eps
        self.V = V
        self.k = int(params["k"])
        self.C, self.c, self.zeta = params["C"], params["c"], params["zeta"]
        self.mu_tilde, self.Q, self.q_ratio = params["mu_tilde"], params["Q"], params["q_ratio"]
        self.b_offset = params["b_offset"]
        self.mu = mu  # strong convexity of psi in original units
        self.scale, self.radius = scale, radius
        self.query_budget, self.seed = query_budget, seed
        self.blocks = n // 2
        if case in (1, 2):
            self.helper = HelperFn("Phi", self.c)
            self.smoothness = scale / radius**2
            self.lipschitz = 0.0
        else:
            self.helper = HelperFn("Chi", self.c)
            self.smoothness = 0.0
            self.lipschitz = scale / radius
        r = np.arange(1, self.k + 1)
        self._even = r % 2 == 0  # mask over differences u_{r-1} - u_r
        if case == 1:
            self._w = (1 - self.mu_tilde) / 16
        elif case == 2:
            self._w = 1.0 / 16
        else:
            self._w = 1 / (2 * math.sqrt(self.k))

    # unit-space evaluation of one component, returning (value, grad wrt u)
    def _component_u(self, p: int, u: np.ndarray):
        diff = u[:-1] - u[1:]
        mask = self._even if p == 0 else ~self._even
        h, dh = self.helper(diff)
        h = np.where(mask, h, 0.0)
        dh = np.where(mask, dh, 0.0)
        w = self._w
        val = w * h.sum()
        gu = np.zeros_like(u)
        gu[:-1] += w * dh
        gu[1:] -= w * dh
        if self.case in (1, 2):
            if p == 0:
                val += w * (u[0] ** 2 - 2 * self.C * u[0])
                gu[0] += w * (2 * u[0] - 2 * self.C)
            else:
                tv, td = self.helper(u[-1])
                val += w * self.zeta * float(tv)
                gu[-1] += w * self.zeta * float(td)
        elif p == 0:
            t = self.b_offset - u[0]
            val += abs(t) / math.sqrt(2)
            gu[0] += -np.sign(t) / math.sqrt(2)
        return float(val), gu

    def value(self, i, x):
        y = as_vector(x, self.d) / self.radius
        blk, p = divmod(int(i), 2)
        return self.scale * self._component_u(p, self.V[blk] @ y)[0]

    def gradient(self, i, x):
        y = as_vector(x, self.d) / self.radius
        blk, p = divmod(int(i), 2)
        gu = self._component_u(p, self.V[blk] @ y)[1]
        return self.scale / self.radius * (gu @ self.V[blk])

    def inner_products(self, x) -> np.ndarray:
        """(n/2, k+1) array of <x/R, v_{i,j}>."""
        return self.V @ (as_vector(x, self.d) / self.radius)

    # -- full objective ------------------------------------------------------
    @property
    def proximal(self) -> ProximalTerm:
        return ProximalTerm.l2(self.mu) if self.mu > 0 else ProximalTerm.zero()

    def F(self, x) -> float:
        x = as_vector(x, self.d)
        return self.mean_value(x) + self.proximal.value(x)

    def closed_form_minimizer(self):
        """(x_hat, F_upper, F_lower) with F_lower <= F* <= F_upper = F(x_hat)."""
        k, C, c = self.k, self.C, self.c
        j = np.arange(k + 1)
        if self.case == 1:
            coef = C * self.q_ratio ** (j + 1)
            sq = math.sqrt(self.Q)
            surrogate = -self.mu_tilde * C**2 * (sq - 1) ** 2 / 16
            slack = (1 - self.mu_tilde) * (k + self.zeta) * c**2 / 16
            lower = surrogate - slack
        elif self.case == 2:
            coef = C * (1 - (j + 1) / (k + 2))
            lower = -C**2 * (k + 1) / (32 * (k + 2)) - (k + 1) * c**2 / 16
        else:
            coef = np.full(k + 1, self.b_offset)
            lower = 0.0  # every term is non-negative
        x_hat = self.radius * np.einsum("j,ijd->d", coef, self.V)
        # F(x_hat) from the block coordinates directly: every block sits at
        # u = coef, which avoids round-off from projecting x_hat back
        f_blocks = 0.5 * (self._component_u(0, coef)[0] + self._component_u(1, coef)[0])
        sq_norm = self.radius**2 * self.blocks * float(coef @ coef)
        upper = self.scale * f_blocks + 0.5 * self.proximal.mu * sq_norm
        return x_hat, upper, min(self.scale * lower, upper)

    def threshold(self) -> float:
        """Gap the lemma guarantees under its hypothesis."""
        return self.eps / 2 if self.case == 3 else self.eps

    def hypothesis(self, x) -> bool:
        small = np.abs(self.inner_products(x)) < self.c / 2
        if self.case == 1:
            return bool(small[:, 1:].any())
        if self.case == 2:
            hits = small[:, : self.k // 2 + 1].any(axis=1)
        else:
            hits = small.any(axis=1)
        return int(hits.sum()) >= self.n / 4

    def to_problem(self) -> ProblemInstance:
        x_hat, upper, lower = self.closed_form_minimizer()
        case = {1: Case.CASE1, 2: Case.CASE2, 3: Case.CASE3, 4: Case.CASE4}[self.case]
        delta = self.F(np.zeros(self.d)) - lower
        return ProblemInstance(self, self.proximal, case, delta=delta,
                               radius=float(np.linalg.norm(x_hat)), x_star=x_hat,
                               f_star_interval=(lower, upper))

    def metadata(self) -> Dict[str, object]:
        return dict(case=self.case, n=self.n, k=self.k, d=self.d, eps=self.eps, C=self.C,
                    c=self.c, zeta=self.zeta, mu_tilde=self.mu_tilde, Q=self.Q,
                    q_ratio=self.q_ratio, b_offset=self.b_offset, mu=self.mu,
                    scale=self.scale, radius=self.radius, N=self.query_budget, seed=self.seed)


def minimal_dimension(n: int, k: int) -> int:
    return (n // 2) * (k + 1)


def gen_hard_instance(case: int, n: int, eps: float, d: Optional[int] = None,
                      mu: Optional[float] = None, ell: float = 1.0, lip: float = 1.0,
                      delta: float = 1.0, R: float = 1.0, N: int = 1, seed: int = 0,
                      log_base: str = "2") -> HardInstance:
    """Draw a hard instance; d defaults to the minimum (n/2)(k+1)."""
    if n < 2 or n % 2:
        raise HardInstanceError(f"n must be even and >= 2, got {n}")
    if not eps > 0:
        raise HardInstanceError("eps must be positive")
    psi_mu = 0.0
    if case == 1:
        if mu is None:
            raise HardInstanceError("Case 1 needs mu")
        params = case1_parameters(n, mu / ell, delta / ell, eps / ell, N, log_base)
        scale, radius, unit_eps, psi_mu = ell, 1.0, eps / ell, mu
    elif case == 2:
        scale, radius = ell * R**2, R
        params = case2_parameters(n, eps / scale, N)
    elif case in (3, 4):
        scale, radius = lip * R, R
        params = case4_parameters(n, eps / scale, N)
        if case == 3:
            psi_mu = eps / R**2
    else:
        raise HardInstanceError(f"unknown case {case}")
    k = int(params["k"])
    d_min = minimal_dimension(n, k)
    d = d_min if d is None else d
    if d < d_min:
        raise HardInstanceError(f"dimension d = {d} too small; need d >= {d_min}")
    V = orthonormal_blocks(n // 2, k, d, np.random.default_rng(seed))
    return HardInstance(case, n, d, eps, params, V, mu=psi_mu, scale=scale, radius=radius,
                        query_budget=N, seed=seed)


# -- checker -------------------------------------------------------------------

@dataclass
class Verdict:
    verdict: str  # "violates" or "consistent"
    hypothesis: bool
    gap: float  # F(x) - F_lower
    threshold: float


def suboptimality_check(inst: HardInstance, x, eps: float) -> Verdict:
    """"violates" iff the hypothesis holds yet F(x) - F_lower < threshold."""
    if not math.isclose(eps, inst.eps, rel_tol=1e-12):
        raise ValueError(f"eps {eps} differs from generation-time eps {inst.eps}")
    x = as_vector(x, inst.d)
    _, _, lower = inst.closed_form_minimizer()
    gap = inst.F(x) - lower
    hyp = inst.hypothesis(x)
    thr = inst.threshold()
    bad = hyp and gap < thr
    return Verdict("violates" if bad else "consistent", hyp, gap, thr)


# -- adversarial points -----------------------------------------------------

def _surrogate_block(inst: HardInstance):
    """Quadratic surrogate of one block in unit coordinates: 0.5 u'Hu - g'u."""
    k, w = inst.k, inst._w
    D = np.zeros((k, k + 1))
    D[np.arange(k), np.arange(k)] = 1.0
    D[np.arange(k), np.arange(1, k + 1)] = -1.0
    H = 2 * w * D.T @ D
    H[0, 0] += 2 * w
    H[k, k] += 2 * w * inst.zeta
    if inst.case == 1:
        # psi share of one block: (mu_tilde/2)||u||^2 next to f_{i,1} + f_{i,2}
        H += inst.mu_tilde * np.eye(k + 1)
    g = np.zeros(k + 1)
    g[0] = 2 * w * inst.C
    return H, g


def pinned_surrogate_minimizer(inst: HardInstance, j: int, p: float) -> np.ndarray:
    """Block coordinates minimising the surrogate subject to u_j = p (Cases 1-2)."""
    H, g = _surrogate_block(inst)
    free = np.array([t for t in range(inst.k + 1) if t != j])
    u = np.empty(inst.k + 1)
    u[j] = p
    u[free] = np.linalg.solve(H[np.ix_(free, free)], g[free] - H[free, j] * p)
    return u


def pinned_lp_minimizer(inst: HardInstance, j: int, p: float) -> np.ndarray:
    """Exact block minimiser of the Lipschitz case subject to u_j = p (Cases 3-4)."""
    from scipy.optimize import linprog

    k, c, b = inst.k, inst.c, inst.b_offset
    # variables: u_0..u_k, t_0, s_1..s_k
    nv = (k + 1) + 1 + k
    cost = np.zeros(nv)
    cost[k + 1] = 1 / math.sqrt(2)
    cost[k + 2:] = inst._w
    A, rhs = [], []

    def row():
        return np.zeros(nv)

    for sgn in (1, -1):  # t0 >= +-(b - u0)
        r = row()
        r[0] = -sgn
        r[k + 1] = -1
        A.append(r)
        rhs.append(-sgn * b)
    for m in range(k):  # s >= +-(u_m - u_{m+1}) - c
        for sgn in (1, -1):
            r = row()
            r[m] = sgn
            r[m + 1] = -sgn
            r[k + 2 + m] = -1
            A.append(r)
            rhs.append(c)
    Aeq = row()
    Aeq[j] = 1
    bounds = [(None, None)] * (k + 1) + [(0, None)] * (k + 1)
    res = linprog(cost, A_ub=np.array(A), b_ub=np.array(rhs), A_eq=Aeq[None], b_eq=[p],
                  bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return res.x[: k + 1]


def adversarial_points(inst: HardInstance, count: int, rng: np.random.Generator,
                       noise: float = 0.1):
    """Points satisfying the lemma hypothesis that sit as close to optimal as
    the hypothesis allows: one block is pinned to a small inner product and
    re-optimised, the other blocks stay at the closed-form optimum, and a
    small perturbation is added away from the pinned direction.
    """
    x_hat, _, _ = inst.closed_form_minimizer()
    y_hat = x_hat / inst.radius
    k, c = inst.k, inst.c
    if inst.case == 1:
        js = np.arange(1, k + 1)
    elif inst.case == 2:
        js = np.arange(0, k // 2 + 1)
    else:
        js = np.arange(0, k + 1)
    cache: Dict[Tuple[int, float], np.ndarray] = {}
    pins = np.linspace(-0.499, 0.499, 11) * c
    out = []
    while len(out) < count:
        i = int(rng.integers(inst.blocks))
        j = int(rng.choice(js))
        if rng.random() < 0.5:
            p = float(pins[rng.integers(len(pins))])
        else:
            p = float(rng.uniform(-0.499, 0.499) * c)
        key = (j, p)
        if key not in cache:
            if inst.case in (1, 2):
                cache[key] = pinned_surrogate_minimizer(inst, j, p)
            else:
                cache[key] = pinned_lp_minimizer(inst, j, p)
        u_new = cache[key]
        Vi = inst.V[i]
        y = y_hat + (u_new - Vi @ y_hat) @ Vi
        pert = rng.standard_normal(inst.d) * noise * c * rng.random()
        pert -= (pert @ Vi[j]) * Vi[j]
        y = y + pert
        x = inst.radius * y
        if inst.hypothesis(x):
            out.append(x)
    return out
