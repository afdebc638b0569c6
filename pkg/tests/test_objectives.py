import numpy as np
import pytest

from finsum.objectives import (AbsoluteLoss, HingeLoss, LeastSquares, MoreauEnvelope,
                               QuadraticForms, ScaledObjective, moreau_gradient)


def _fd_grad(f, x, h=1e-6):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(len(x))])


@pytest.mark.parametrize("cls", [LeastSquares, QuadraticForms])
def test_gradients_match_finite_differences(cls, rng):
    if cls is LeastSquares:
        obj = LeastSquares(rng.standard_normal((4, 3)), rng.standard_normal(4))
    else:
        H = rng.standard_normal((4, 3, 3))
        obj = QuadraticForms(H + H.transpose(0, 2, 1), rng.standard_normal((4, 3)))
    x = rng.standard_normal(3)
    for i in range(obj.n):
        np.testing.assert_allclose(obj.gradient(i, x), _fd_grad(lambda z: obj.value(i, z), x),
                                   atol=1e-6)
    np.testing.assert_allclose(obj.gradients(range(4), x),
                               np.stack([obj.gradient(i, x) for i in range(4)]))
    np.testing.assert_allclose(obj.values(range(4), x), [obj.value(i, x) for i in range(4)])


def _prox_by_minimisation(obj, i, gamma, x):
    from scipy.optimize import minimize

    res = minimize(lambda z: obj.value(i, z) + np.sum((z - x) ** 2) / (2 * gamma), x,
                   method="Nelder-Mead", options=dict(xatol=1e-10, fatol=1e-14, maxiter=20000))
    return res.x


@pytest.mark.parametrize("make", [
    lambda r: LeastSquares(r.standard_normal((3, 2)), r.standard_normal(3)),
    lambda r: AbsoluteLoss(r.standard_normal((3, 2)), r.standard_normal(3)),
    lambda r: HingeLoss(r.standard_normal((3, 2)), np.array([1.0, -1.0, 1.0])),
])
def test_component_prox_matches_direct_minimisation(make, rng):
    obj = make(rng)
    for gamma in (0.1, 1.0, 5.0):
        x = rng.standard_normal(2)
        for i in range(obj.n):
            p = obj.prox(i, gamma, x)
            ref = _prox_by_minimisation(obj, i, gamma, x)
            val = lambda z: obj.value(i, z) + np.sum((z - x) ** 2) / (2 * gamma)
            assert val(p) <= val(ref) + 1e-9


def _huber(r, lam, s):
    # envelope of |t| along a direction with ||a||^2 = s
    return np.where(np.abs(r) <= lam * s, r**2 / (2 * lam * s), np.abs(r) - lam * s / 2)


def test_absolute_loss_envelope_is_huber(rng):
    a = rng.standard_normal(3)
    obj = AbsoluteLoss(a[None], np.array([0.3]))
    lam, s = 0.5, float(a @ a)
    env = MoreauEnvelope(obj, lam)
    for _ in range(20):
        x = rng.standard_normal(3)
        r = a @ x - 0.3
        assert env.value(0, x) == pytest.approx(float(_huber(r, lam, s)), abs=1e-12)
        fd = _fd_grad(lambda z: float(_huber(a @ z - 0.3, lam, s)), x)
        np.testing.assert_allclose(env.gradient(0, x), fd, atol=1e-5)


def test_envelope_gradient_bounded_by_lipschitz(rng):
    obj = HingeLoss(rng.standard_normal((5, 4)), np.array([1.0, -1, 1, -1, 1]))
    for lam in (10.0, 1e3, 1e6):
        for i in range(5):
            g = moreau_gradient(obj, i, lam, 100 * rng.standard_normal(4))
            assert np.linalg.norm(g) <= obj.lipschitz + 1e-12


def test_envelope_gradient_zero_at_symmetric_kink():
    obj = AbsoluteLoss(np.array([[1.0, 2.0]]), np.array([0.0]))
    np.testing.assert_array_equal(moreau_gradient(obj, 0, 0.7, np.zeros(2)), np.zeros(2))


def test_envelope_converges_to_smooth_function_as_lambda_shrinks(rng):
    obj = LeastSquares(rng.standard_normal((4, 3)), rng.standard_normal(4))
    x = rng.standard_normal(3)
    gaps = [abs(MoreauEnvelope(obj, lam).mean_value(x) - obj.mean_value(x))
            for lam in (1e-1, 1e-3, 1e-5)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


def test_scaled_objective(rng):
    base = LeastSquares(rng.standard_normal((3, 2)), rng.standard_normal(3))
    sc = ScaledObjective(base, scale=3.0, radius=2.0)
    x = rng.standard_normal(2)
    assert sc.value(1, x) == pytest.approx(3.0 * base.value(1, x / 2))
    np.testing.assert_allclose(sc.gradient(1, x), _fd_grad(lambda z: sc.value(1, z), x), atol=1e-6)
    assert sc.smoothness == pytest.approx(base.smoothness * 3 / 4)


def test_hinge_labels_validated():
    with pytest.raises(ValueError):
        HingeLoss(np.eye(2), np.array([1.0, 0.0]))
