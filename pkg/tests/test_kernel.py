import math

import numpy as np
import pytest

from gpcolloc.kernel import KernelOrderError, SEKernel, hermite_he

from _oracles import se_derivative_fd, se_derivative_fd_table, se_kernel_mp


def test_value_at_zero_separation():
    k = SEKernel.isotropic(2.0, 0.7, 1)
    assert k.eval([1.3], [1.3]) == 4.0


def test_unit_separation():
    k = SEKernel.isotropic(1.0, 1.0, 1)
    assert k.eval([0.0], [1.0]) == pytest.approx(0.606530659712633, rel=1e-15)


def test_disk_lengthscale_example():
    k = SEKernel.isotropic(0.1, 3.5, 2)
    assert k.eval([0.0, 0.0], [1.0, 0.0]) == pytest.approx(0.01 * math.exp(-1 / (2 * 3.5**2)), rel=1e-15)


def test_anisotropic_matches_high_precision_formula(rng):
    for _ in range(20):
        s, ells = rng.uniform(0.1, 3), tuple(rng.uniform(0.2, 2, 3))
        x, xp = rng.uniform(-2, 2, 3), rng.uniform(-2, 2, 3)
        assert SEKernel(s, ells).eval(x, xp) == pytest.approx(se_kernel_mp(s, ells, x, xp), rel=1e-14)


def test_broadcasting():
    k = SEKernel.isotropic(1.0, 0.5, 2)
    X = np.random.default_rng(1).uniform(-1, 1, (4, 2))
    K = k.eval(X[:, None, :], X[None, :, :])
    assert K.shape == (4, 4)
    assert np.allclose(K, K.T)
    assert np.allclose(np.diag(K), 1.0)


@pytest.mark.parametrize("bad", [dict(s=0.0, lengthscales=(1.0,)), dict(s=1.0, lengthscales=(1.0, -1.0)),
                                 dict(s=1.0, lengthscales=(1.0,) * 4)])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        SEKernel(**bad)


def test_hermite_low_orders():
    t = np.linspace(-2, 2, 7)
    assert np.allclose(hermite_he(0, t), 1)
    assert np.allclose(hermite_he(1, t), t)
    assert np.allclose(hermite_he(2, t), t**2 - 1)
    assert np.allclose(hermite_he(3, t), t**3 - 3 * t)
    assert np.allclose(hermite_he(4, t), t**4 - 6 * t**2 + 3)


def test_zeroth_derivative_is_kernel():
    k = SEKernel(1.3, (0.4, 0.9))
    x, xp = [0.2, -0.5], [1.0, 0.3]
    assert k.eval_derivative((0, 0), (0, 0), x, xp) == k.eval(x, xp)


def test_first_mixed_derivative_at_coincidence():
    s, ell = 1.7, 0.6
    k = SEKernel.isotropic(s, ell, 1)
    expected = s**2 / ell**2
    assert k.eval_derivative((1,), (1,), [0.4], [0.4]) == pytest.approx(expected, rel=1e-15)
    assert se_derivative_fd(s, (ell,), (1,), (1,), [0.4], [0.4]) == pytest.approx(expected, rel=1e-9)


def test_second_derivative_at_coincidence():
    s, ell = 1.7, 0.6
    k = SEKernel.isotropic(s, ell, 1)
    expected = -(s**2) / ell**2
    assert k.eval_derivative((2,), (0,), [0.4], [0.4]) == pytest.approx(expected, rel=1e-15)
    assert se_derivative_fd(s, (ell,), (2,), (0,), [0.4], [0.4]) == pytest.approx(expected, rel=1e-9)


def test_order_cap():
    k = SEKernel.isotropic(1.0, 1.0, 2)
    k.eval_derivative((4, 0), (4, 0), [0, 0], [1, 1])
    with pytest.raises(KernelOrderError):
        k.eval_derivative((5, 0), (4, 0), [0, 0], [1, 1])


def test_exchange_symmetry(rng):
    for _ in range(200):
        d = int(rng.integers(1, 4))
        k = SEKernel(rng.uniform(0.2, 2), tuple(rng.uniform(0.3, 2, d)))
        a = tuple(int(v) for v in rng.integers(0, 4, d))
        b = tuple(int(v) for v in rng.integers(0, 4, d))
        x, xp = rng.uniform(-2, 2, d), rng.uniform(-2, 2, d)
        lhs = k.eval_derivative(a, b, x, xp)
        rhs = k.eval_derivative(b, a, xp, x)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_translation_invariance(rng):
    for _ in range(200):
        d = int(rng.integers(1, 4))
        k = SEKernel(rng.uniform(0.2, 2), tuple(rng.uniform(0.3, 2, d)))
        a = tuple(int(v) for v in rng.integers(0, 4, d))
        b = tuple(int(v) for v in rng.integers(0, 4, d))
        x, xp, shift = rng.uniform(-2, 2, d), rng.uniform(-2, 2, d), rng.uniform(-5, 5, d)
        base = k.eval_derivative(a, b, x, xp)
        moved = k.eval_derivative(a, b, x + shift, xp + shift)
        # relative to the derivative's natural size where it crosses zero
        scale = k.s**2 * np.prod(np.asarray(k.lengthscales) ** -(np.add(a, b)))
        assert abs(moved - base) <= 1e-12 * max(abs(base), scale)


@pytest.mark.parametrize("d", [1, 2])
def test_finite_difference_agreement_sample(rng, d):
    """Quick version; the full 100-pair sweep is acceptance criterion 1."""
    worst = 0.0
    for _ in range(10):
        s, ells = rng.uniform(0.5, 2), rng.uniform(0.5, 2, d)
        x, xp = rng.uniform(-2, 2, d), rng.uniform(-2, 2, d)
        k = SEKernel(s, tuple(ells))
        for (a, b), ref in se_derivative_fd_table(s, ells, x, xp).items():
            worst = max(worst, abs(k.eval_derivative(a, b, x, xp) - ref) / abs(ref))
    assert worst <= 1e-5


def test_derivative_gram_is_psd(rng):
    k = SEKernel.isotropic(1.2, 0.5, 1)
    for _ in range(20):
        X = rng.uniform(-2, 2, (8, 1))
        G = k.eval_derivative((1,), (1,), X[:, None, :], X[None, :, :])
        eig = np.linalg.eigvalsh(G)
        assert eig[0] >= -1e-10 * eig[-1]


def test_with_lengthscale_ties_dimensions():
    k = SEKernel(1.0, (0.3, 0.7)).with_lengthscale(2.0)
    assert k.lengthscales == (2.0, 2.0) and k.s == 1.0
