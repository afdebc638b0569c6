"""Dual query accounting: classical samples vs. modelled quantum queries."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, Tuple

# Relative slack used when rounding cost formulas up.  Products such as
# sqrt(d) * sigma / sigma_hat land a few ulps above an integer (sqrt(2)*sqrt(8)
# is 4.000000000000001); those must charge 4, not 5.
_CEIL_RTOL = 1e-9


def ceil_tol(x: float) -> int:
    """ceil(x), treating values within a relative 1e-9 of an integer as exact."""
    if x <= 0:
        return 0
    r = round(x)
    if abs(x - r) <= _CEIL_RTOL * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def quantum_mean_cost(d: int, sigma: float, sigma_hat: float) -> int:
    """Modelled query cost of unbiased quantum mean estimation.

    ceil(sqrt(d) * sigma / sigma_hat) with polylog factors dropped
    (constant 1); zero when the variable is deterministic.
    """
    if not sigma_hat > 0:
        raise ValueError(f"sigma_hat must be positive, got {sigma_hat}")
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return 0
    return ceil_tol(math.sqrt(d) * sigma / sigma_hat)


@dataclass
class QueryLedger:
    classical_queries: int = 0
    quantum_modeled_queries: float = 0
    per_phase: Dict[str, Tuple[int, float]] = field(default_factory=dict)

    def _add(self, phase: str, classical: int, quantum) -> None:
        if classical < 0 or quantum < 0:
            raise ValueError("charges must be non-negative")
        c, q = self.per_phase.get(phase, (0, 0))
        self.per_phase[phase] = (c + classical, q + quantum)
        self.classical_queries += classical
        self.quantum_modeled_queries += quantum

    def charge_classical(self, phase: str, count: int) -> None:
        self._add(phase, int(count), 0)

    def charge_quantum(self, phase: str, amount) -> None:
        self._add(phase, 0, amount)

    def charge_full_pass(self, phase: str, n: int) -> None:
        # non-superposed pass: modelled quantum cost equals classical cost
        self._add(phase, int(n), int(n))

    def charge_quantum_mean(self, phase: str, d: int, sigma: float,
                            sigma_hat: float) -> int:
        amount = quantum_mean_cost(d, sigma, sigma_hat)
        self._add(phase, 0, amount)
        return amount

    def snapshot(self) -> Tuple[int, float]:
        return self.classical_queries, self.quantum_modeled_queries

    def merge(self, other: "QueryLedger") -> None:
        for phase, (c, q) in other.per_phase.items():
            self._add(phase, c, q)

    def relabeled(self, mapping: Dict[str, str]) -> "QueryLedger":
        out = QueryLedger()
        for phase, (c, q) in self.per_phase.items():
            out._add(mapping.get(phase, phase), c, q)
        return out

    def is_consistent(self) -> bool:
        c = sum(v[0] for v in self.per_phase.values())
        q = sum(v[1] for v in self.per_phase.values())
        return c == self.classical_queries and q == self.quantum_modeled_queries

    def csv_rows(self, run_id: str):
        return [(run_id, phase, c, q)
                for phase, (c, q) in sorted(self.per_phase.items())]

    def to_csv(self, run_id: str) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run_id", "phase", "classical", "quantum_modeled"])
        w.writerows(self.csv_rows(run_id))
        return buf.getvalue()
