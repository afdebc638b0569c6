"""Query problems behind the lower bounds: MCP, MDP and the weighted adversary.

Indices follow the problem statements: rows i run over 1..n and prefix
lengths j over 1..k (0..k-1 for MDP, where j counts the known choices).
Bit strings may be given as str ("0110") or as sequences of 0/1.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Sequence, Tuple

import numpy as np

ENUMERATION_LIMIT = 20  # n*k; 2^(n k) inputs


def _bits(s) -> Tuple[int, ...]:
    if isinstance(s, str):
        if any(ch not in "01" for ch in s):
            raise ValueError(f"not a bit string: {s!r}")
        return tuple(int(ch) for ch in s)
    out = tuple(int(b) for b in s)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"not a bit string: {s!r}")
    return out


@dataclass(frozen=True)
class McpInstance:
    """n hidden k-bit strings (rows of ``bits``)."""

    bits: Tuple[Tuple[int, ...], ...]

    @classmethod
    def from_array(cls, arr) -> "McpInstance":
        arr = np.asarray(arr, dtype=int)
        if arr.ndim != 2 or not np.isin(arr, (0, 1)).all():
            raise ValueError("bits must be a 2-D 0/1 array")
        return cls(tuple(tuple(int(b) for b in row) for row in arr))

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def k(self) -> int:
        return len(self.bits[0])


def mcp_query(inst: McpInstance, i: int, j: int, s) -> int:
    """1 iff s equals the first j bits of row i."""
    s = _bits(s)
    if not (1 <= i <= inst.n and 1 <= j <= inst.k and len(s) == j):
        raise ValueError(f"malformed MCP query (i={i}, j={j}, |s|={len(s)})")
    return int(inst.bits[i - 1][:j] == s)


@dataclass(frozen=True)
class MdpInstance:
    """n x k matrix whose entry (i, j) is one of two candidate vectors."""

    choices: Tuple[Tuple[int, ...], ...]
    candidates: np.ndarray  # shape (n, k, 2, dim)

    @classmethod
    def random(cls, n: int, k: int, dim: int, rng: np.random.Generator) -> "MdpInstance":
        choices = rng.integers(0, 2, size=(n, k))
        cand = rng.standard_normal((n, k, 2, dim))
        return cls(tuple(tuple(int(b) for b in row) for row in choices), cand)

    @property
    def n(self) -> int:
        return len(self.choices)

    @property
    def k(self) -> int:
        return len(self.choices[0])

    def matrix(self) -> np.ndarray:
        """a_{i,j} = v_{i,j,choices[i][j]}."""
        ch = np.asarray(self.choices)
        n, k = ch.shape
        return self.candidates[np.arange(n)[:, None], np.arange(k)[None, :], ch]

    def as_mcp(self) -> McpInstance:
        return McpInstance(self.choices)


def mdp_query(inst: MdpInstance, i: int, j: int, m) -> Tuple[int, int]:
    """(1, choice j+1 of row i) if m matches the first j choices, else (0, 0)."""
    m = _bits(m)
    if not (1 <= i <= inst.n) or not (0 <= j < inst.k) or len(m) != j:
        raise ValueError(f"malformed MDP query (i={i}, j={j}, |m|={len(m)})")
    row = inst.choices[i - 1]
    if row[:j] == m:
        return 1, row[j]
    return 0, 0


def mdp_via_mcp(i: int, j: int, m, mcp_oracle: Callable) -> Tuple[int, int]:
    """Answer an MDP query with exactly two MCP queries of length j+1.

    Works with scalar oracles and with oracles that answer a whole batch of
    instances at once (0/1 arrays).
    """
    m = _bits(m)
    r0 = mcp_oracle(i, j + 1, m + (0,))
    r1 = mcp_oracle(i, j + 1, m + (1,))
    found = r0 | r1
    value = r1 & (1 - r0)
    return found, value


class CountingOracle:
    def __init__(self, fn: Callable):
        self.fn, self.calls = fn, 0

    def __call__(self, *args):
        self.calls += 1
        return self.fn(*args)


def exhaustive_mdp_check(n: int, k: int) -> Tuple[int, int, int]:
    """Compare mdp_via_mcp with mdp_query on all 2^(n k) choice matrices.

    All instances are answered together: instance X has row i equal to bits
    k*(i-1) .. k*i - 1 of X, most significant first.  Returns
    (mismatches, mcp_calls, mdp_calls); calls are counted per query batch,
    so each batch stands for the same query on every instance.
    """
    if n * k > ENUMERATION_LIMIT:
        raise ValueError(f"n*k = {n * k} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    X = np.arange(2 ** (n * k), dtype=np.int64)
    mask = (1 << k) - 1
    rows = [(X >> (k * (n - i))) & mask for i in range(1, n + 1)]

    def mcp_batch(i, length, s):
        s_int = int("".join(map(str, s)), 2)
        return (rows[i - 1] >> (k - length) == s_int).astype(np.int64)

    oracle = CountingOracle(mcp_batch)
    mismatches = mdp_calls = 0
    for i in range(1, n + 1):
        row = rows[i - 1]
        for j in range(k):
            for m in itertools.product((0, 1), repeat=j):
                m_int = int("".join(map(str, m)), 2) if j else 0
                match = (row >> (k - j)) == m_int
                nxt = (row >> (k - j - 1)) & 1
                exp_found = match.astype(np.int64)
                exp_value = np.where(match, nxt, 0)
                found, value = mdp_via_mcp(i, j, m, oracle)
                mdp_calls += 1
                mismatches += int(np.count_nonzero((found != exp_found) | (value != exp_value)))
    return mismatches, oracle.calls, mdp_calls


# -- adversary bound -------------------------------------------------------------

@dataclass
class QueryProblem:
    inputs: List[Hashable]
    queries: List[Hashable]
    response: Callable[[Hashable, Hashable], int]
    target: Callable[[Hashable], Hashable]

    def __post_init__(self):
        self.xi = np.array([[int(self.response(x, q)) for q in self.queries]
                            for x in self.inputs], dtype=np.int8)
        self.f = [self.target(x) for x in self.inputs]


@dataclass
class WeightScheme:
    """Sparse weights over input indices; unlisted entries are zero.

    ``w`` maps (x, y) to w(x, y); ``w_prime`` maps (x, y) to {q: w'(x, y, q)}.
    """

    w: Dict[Tuple[int, int], float]
    w_prime: Dict[Tuple[int, int], Dict[int, float]]


class SchemeViolation(ValueError):
    pass


def validate_scheme(problem: QueryProblem, scheme: WeightScheme) -> None:
    """Check every condition on every (x, y, q); unlisted weights count as 0."""
    xi, f = problem.xi, problem.f
    for (x, y), wv in scheme.w.items():
        if wv < 0:
            raise SchemeViolation(f"w({x},{y}) = {wv} < 0")
        if wv > 0 and f[x] == f[y]:
            raise SchemeViolation(f"w({x},{y}) > 0 but f(x) = f(y)")
        if scheme.w.get((y, x), 0.0) != wv:
            raise SchemeViolation(f"w not symmetric at ({x},{y})")
    for (x, y), row in scheme.w_prime.items():
        for q, wv in row.items():
            if wv < 0:
                raise SchemeViolation(f"w'({x},{y},{q}) = {wv} < 0")
            if wv > 0 and (xi[x, q] == xi[y, q] or f[x] == f[y]):
                raise SchemeViolation(f"w'({x},{y},{q}) > 0 but xi or f agree")
    for (x, y), wv in scheme.w.items():
        if wv <= 0:
            continue
        wp_xy = scheme.w_prime.get((x, y), {})
        wp_yx = scheme.w_prime.get((y, x), {})
        for q in np.flatnonzero(xi[x] != xi[y]):
            q = int(q)
            if wp_xy.get(q, 0.0) * wp_yx.get(q, 0.0) < wv * wv:
                raise SchemeViolation(
                    f"w'({x},{y},{q}) * w'({y},{x},{q}) < w({x},{y})^2")


def adversary_bound(problem: QueryProblem, scheme: WeightScheme) -> float:
    """min over admissible (x, y, q) of sqrt(mu(x) mu(y) / (nu(x,q) nu(y,q)))."""
    validate_scheme(problem, scheme)
    N, M = len(problem.inputs), len(problem.queries)
    mu = np.zeros(N)
    for (x, _), wv in scheme.w.items():
        mu[x] += wv
    nu = np.zeros((N, M))
    for (x, _), row in scheme.w_prime.items():
        for q, wv in row.items():
            nu[x, q] += wv
    xi = problem.xi
    best = math.inf
    for (x, y), wv in scheme.w.items():
        if wv <= 0:
            continue
        qs = np.flatnonzero(xi[x] != xi[y])
        if qs.size == 0:
            continue
        ratio = np.sqrt(mu[x] * mu[y] / (nu[x, qs] * nu[y, qs]))
        best = min(best, float(ratio.min()))
    if best is math.inf:
        raise SchemeViolation("no admissible (x, y, q) triple: all weights vanish")
    return best


def mcp_problem(n: int, k: int) -> QueryProblem:
    """All 2^(n k) inputs of MCP with every (i, t, s) query; target is the input."""
    if n * k > ENUMERATION_LIMIT:
        raise ValueError(f"n*k = {n * k} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    inputs = [tuple(tuple(bits[r * k:(r + 1) * k]) for r in range(n))
              for bits in itertools.product((0, 1), repeat=n * k)]
    queries = [(i, t, s) for i in range(1, n + 1) for t in range(1, k + 1)
               for s in itertools.product((0, 1), repeat=t)]
    return QueryProblem(inputs, queries,
                        response=lambda x, q: int(x[q[0] - 1][:q[1]] == q[2]),
                        target=lambda x: x)


def mcp_weight_scheme(n: int, k: int, problem: QueryProblem = None) -> WeightScheme:
    """w = 1 on Hamming-distance-1 pairs; w' = 1 there when the answers differ."""
    if n * k > ENUMERATION_LIMIT:
        raise ValueError(f"n*k = {n * k} exceeds the enumeration limit {ENUMERATION_LIMIT}")
    problem = problem if problem is not None else mcp_problem(n, k)
    xi = problem.xi
    nk = n * k
    w: Dict[Tuple[int, int], float] = {}
    w_prime: Dict[Tuple[int, int], Dict[int, float]] = {}
    # inputs are enumerated in product order, so index = integer value of the bits
    for x in range(len(problem.inputs)):
        for b in range(nk):
            y = x ^ (1 << b)
            w[(x, y)] = 1.0
            w_prime[(x, y)] = {int(q): 1.0 for q in np.flatnonzero(xi[x] != xi[y])}
    return WeightScheme(w, w_prime)


def mcp_bound_table(sizes: Sequence[Tuple[int, int]]) -> List[Tuple[int, int, float, float, float]]:
    rows = []
    for n, k in sizes:
        problem = mcp_problem(n, k)
        bound = adversary_bound(problem, mcp_weight_scheme(n, k, problem))
        expected = n * math.sqrt(k)
        rows.append((n, k, bound, expected, abs(bound - expected)))
    return rows


def bound_table_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["n", "k", "bound", "expected", "max_abs_deviation"])
    for n, k, b, e, dev in rows:
        wr.writerow([n, k, repr(b), repr(e), repr(dev)])
    return buf.getvalue()


def dimension_requirement(n: int, k: int, c: float, R: float, N: int) -> int:
    """ceil(n(k+1) + (8 R^2 / c^2) log2(2 n k N^3)), taking h = 1."""
    for name, v in (("n", n), ("k", k), ("c", c), ("R", R), ("N", N)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    return math.ceil(n * (k + 1) + (8 * R**2 / c**2) * math.log2(2 * n * k * N**3))
