import math

import pytest
from hypothesis import given, strategies as st

from finsum.ledger import QueryLedger, ceil_tol, quantum_mean_cost


def test_zero_charge_leaves_ledger_unchanged():
    led = QueryLedger()
    led.charge_classical("x", 0)
    assert led.snapshot() == (0, 0)


def test_full_pass_charge():
    led = QueryLedger()
    led.charge_full_pass("full_gradient", 8)
    assert led.classical_queries == 8
    assert led.per_phase["full_gradient"] == (8, 8)


def test_two_charges_accumulate():
    led = QueryLedger()
    led.charge_classical("qvrg", 3)
    led.charge_classical("qvrg", 5)
    assert led.classical_queries == 8
    assert led.per_phase["qvrg"][0] == 8


def test_negative_charge_rejected():
    with pytest.raises(ValueError):
        QueryLedger().charge_classical("x", -1)


@pytest.mark.parametrize("d,sigma,sigma_hat,expected", [
    (5, 0.0, 1.0, 0),
    (16, 2.0, 1.0, 8),
    (9, 1.0, 2.0, 2),
])
def test_quantum_mean_cost(d, sigma, sigma_hat, expected):
    assert quantum_mean_cost(d, sigma, sigma_hat) == expected


def test_quantum_mean_cost_rejects_bad_sigma_hat():
    with pytest.raises(ValueError):
        quantum_mean_cost(4, 1.0, 0.0)


def test_ceil_tol_absorbs_rounding_noise():
    assert math.sqrt(2) * math.sqrt(8) > 4
    assert ceil_tol(math.sqrt(2) * math.sqrt(8)) == 4
    assert ceil_tol(4.01) == 5
    assert ceil_tol(0.0) == 0


@given(st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.integers(0, 1000),
                          st.integers(0, 1000)), max_size=30))
def test_phase_totals_are_consistent(charges):
    led = QueryLedger()
    for phase, c, q in charges:
        led.charge_classical(phase, c)
        led.charge_quantum(phase, q)
    assert led.is_consistent()
    assert led.classical_queries == sum(c for _, c, _ in charges)
    merged = QueryLedger()
    merged.merge(led)
    merged.merge(led)
    assert merged.snapshot() == (2 * led.classical_queries, 2 * led.quantum_modeled_queries)
    relabeled = led.relabeled({"a": "b"})
    assert relabeled.snapshot() == led.snapshot()


def test_csv_export():
    led = QueryLedger()
    led.charge_full_pass("full_gradient", 4)
    led.charge_quantum("qvrg", 3)
    lines = led.to_csv("run1").splitlines()
    assert lines[0] == "run_id,phase,classical,quantum_modeled"
    assert lines[1:] == ["run1,full_gradient,4,4", "run1,qvrg,0,3"]
