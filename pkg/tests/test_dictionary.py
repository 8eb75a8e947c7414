import warnings

import numpy as np
import pytest

from gtsc.dictionary import (
    atom_norms,
    dict_from_dual,
    dual_value_and_derivatives,
    init_dictionary,
    learn_dictionary,
    newton_dual,
)
from gtsc.exceptions import DegenerateCodesWarning, DimMismatch, SingularSystem
from gtsc.tensor import _half_weights, _rdft3, dft3, idft3, tprod


def spectra(rng, m=4, r=3, n=7, k=5, scale=1.0):
    x = scale * rng.standard_normal((m, n, k))
    b = rng.standard_normal((r, n, k))
    return x, b, dft3(x), dft3(b)


def fd_grad(xh, bh, lam, h=1e-6):
    g = np.zeros_like(lam)
    for j in range(lam.size):
        e = np.zeros_like(lam)
        e[j] = h
        g[j] = (dual_value_and_derivatives(xh, bh, lam + e)[0]
                - dual_value_and_derivatives(xh, bh, lam - e)[0]) / (2 * h)
    return g


def test_scalar_dictionary():
    xh = np.array([[[2.0]]], dtype=complex)
    bh = np.array([[[1.0]]], dtype=complex)
    np.testing.assert_allclose(dict_from_dual(xh, bh, [0.0]), [[[2.0]]])
    value, grad, _ = dual_value_and_derivatives(xh, bh, [0.0])
    assert value == pytest.approx(-4.0)
    assert grad[0] == pytest.approx(3.0)


def test_large_lambda_shrinks_dictionary(rng):
    _, _, xh, bh = spectra(rng)
    assert np.linalg.norm(dict_from_dual(xh, bh, np.full(3, 1e12))) < 1e-9


def test_normal_equations_residual(rng):
    _, _, xh, bh = spectra(rng)
    lam = np.full(3, 1e-8)
    D = dict_from_dual(xh, bh, lam)
    bhh = np.conj(bh.transpose(0, 2, 1))
    resid = D @ (bh @ bhh + np.diag(lam)) - xh @ bhh
    assert np.linalg.norm(resid) < 1e-9


def test_singular_system():
    xh = np.ones((2, 3, 4), dtype=complex)
    bh = np.zeros((2, 2, 4), dtype=complex)
    with pytest.raises(SingularSystem):
        dict_from_dual(xh, bh, np.zeros(2))


def test_dual_derivatives_finite_differences(rng):
    for _ in range(10):
        _, _, xh, bh = spectra(rng)
        lam = rng.uniform(0.1, 3.0, 3)
        _, grad, hess = dual_value_and_derivatives(xh, bh, lam)
        assert np.linalg.norm(fd_grad(xh, bh, lam) - grad) / np.linalg.norm(grad) < 1e-5
        h = 1e-6
        fd_hess = np.column_stack([
            (dual_value_and_derivatives(xh, bh, lam + h * e)[1]
             - dual_value_and_derivatives(xh, bh, lam - h * e)[1]) / (2 * h)
            for e in np.eye(3)
        ])
        assert np.linalg.norm(fd_hess - hess) / np.linalg.norm(hess) < 1e-5


def test_half_spectrum_weights_match_full(rng):
    for k in (1, 4, 5):
        x, b, xh, bh = spectra(rng, k=k)
        lam = rng.uniform(0.1, 2.0, 3)
        full = dual_value_and_derivatives(xh, bh, lam)
        half = dual_value_and_derivatives(_rdft3(x), _rdft3(b), lam, weights=_half_weights(k))
        assert half[0] == pytest.approx(full[0], rel=1e-12)
        np.testing.assert_allclose(half[1], full[1], rtol=1e-10, atol=1e-10)
        np.testing.assert_allclose(half[2], full[2], rtol=1e-10, atol=1e-12)


def test_dual_concavity(rng):
    _, _, xh, bh = spectra(rng)
    for _ in range(30):
        a, c = rng.uniform(0, 5, 3), rng.uniform(0, 5, 3)
        mid = dual_value_and_derivatives(xh, bh, 0.5 * (a + c))[0]
        ends = 0.5 * (dual_value_and_derivatives(xh, bh, a)[0] + dual_value_and_derivatives(xh, bh, c)[0])
        assert mid >= ends - 1e-9 * abs(ends)


def test_newton_kkt(rng):
    for _ in range(10):
        _, _, xh, bh = spectra(rng, scale=3.0)
        lam, info = newton_dual(xh, bh, np.ones(3), return_info=True)
        _, grad, _ = dual_value_and_derivatives(xh, bh, lam)
        assert np.all(lam >= 0)
        assert np.all(grad <= 1e-7)
        assert np.all(np.abs(lam * grad) < 1e-5)
        assert np.all(np.diff(info["values"]) >= 0)


def test_newton_interior_optimum_fast(rng):
    _, _, xh, bh = spectra(rng, n=20, scale=0.01)
    lam, info = newton_dual(xh, bh, np.ones(3), return_info=True)
    assert info["iterations"] <= 3
    np.testing.assert_array_equal(lam, 0)
    assert np.all(dual_value_and_derivatives(xh, bh, lam)[1] < 0)


def test_newton_zero_codes_uses_floor():
    xh = dft3(np.ones((3, 4, 2)))
    bh = np.zeros((2, 2, 4), dtype=complex)
    lam, info = newton_dual(xh, bh, np.ones(2), return_info=True)
    assert info["lower"] == pytest.approx(1e-6)
    assert np.all(lam <= 1e-6 + 1e-15)
    assert not np.any(dict_from_dual(xh, bh, lam))


def test_newton_value_not_below_start(rng):
    _, _, xh, bh = spectra(rng, scale=2.0)
    lam0 = rng.uniform(0, 4, 3)
    lam = newton_dual(xh, bh, lam0)
    assert dual_value_and_derivatives(xh, bh, lam)[0] >= dual_value_and_derivatives(xh, bh, lam0)[0]


def test_learn_dictionary_least_squares_k1(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((8, 3)))
    b = Q.T[:, :, None]  # orthonormal rows
    x = 0.1 * rng.standard_normal((4, 8, 1))
    res = learn_dictionary(x, b, return_result=True)
    expected = x[:, :, 0] @ b[:, :, 0].T
    np.testing.assert_allclose(res.dictionary[:, :, 0], expected, atol=1e-10)
    np.testing.assert_allclose(res.lam, 0, atol=1e-12)
    assert np.all(atom_norms(res.dictionary) < 1)


def test_learn_dictionary_planted(rng):
    d_true = init_dictionary(5, 3, 4, random_state=1)
    b = rng.standard_normal((3, 12, 4))
    x = tprod(d_true, b)
    d = learn_dictionary(x, b)
    resid = x - tprod(d, b)
    assert 0.5 * np.sum(resid ** 2) < 1e-6
    np.testing.assert_allclose(atom_norms(d), 1.0, atol=1e-6)


def test_learn_dictionary_zero_codes(rng):
    x = rng.standard_normal((3, 4, 5))
    prev = init_dictionary(3, 2, 5, random_state=0)
    with pytest.warns(DegenerateCodesWarning):
        d = learn_dictionary(x, np.zeros((2, 4, 5)))
    assert not np.any(d)
    with pytest.warns(DegenerateCodesWarning):
        np.testing.assert_array_equal(learn_dictionary(x, np.zeros((2, 4, 5)), previous=prev), prev)


def test_unused_atoms_keep_previous(rng):
    x = rng.standard_normal((3, 6, 4))
    b = rng.standard_normal((3, 6, 4))
    b[1] = 0.0
    prev = init_dictionary(3, 3, 4, random_state=2)
    d = learn_dictionary(x, b, previous=prev)
    np.testing.assert_array_equal(d[:, 1, :], prev[:, 1, :])


def test_feasibility_kkt_and_monotonicity(rng):
    for _ in range(10):
        x = 3.0 * rng.standard_normal((4, 9, 6))
        b = rng.standard_normal((3, 9, 6)) * (rng.random((3, 9, 6)) < 0.5)
        prev = init_dictionary(4, 3, 6, random_state=int(rng.integers(1000)))
        res = learn_dictionary(x, b, previous=prev, return_result=True)
        d = res.dictionary
        assert np.all(atom_norms(d) <= 1 + 1e-8)
        spectral = np.sum(np.abs(dft3(d)) ** 2, axis=(0, 1))
        assert np.all(spectral <= 6 + 1e-6)
        assert np.all(np.abs(res.lam * (spectral - 6)) < 1e-5)
        before = np.sum((x - tprod(prev, b)) ** 2)
        after = np.sum((x - tprod(d, b)) ** 2)
        assert after <= before


def test_full_spectrum_dictionary_is_real(rng):
    x, b, xh, bh = spectra(rng, k=6, scale=3.0)
    lam = newton_dual(xh, bh, np.ones(3))
    D = dict_from_dual(xh, bh, lam)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d = idft3(D)
    assert np.max(np.abs(np.fft.ifft(D, axis=0).imag)) < 1e-9
    assert np.all(atom_norms(d) <= 1 + 1e-8)


def test_dimension_checks(rng):
    with pytest.raises(DimMismatch):
        learn_dictionary(rng.standard_normal((3, 4, 5)), rng.standard_normal((2, 5, 5)))
    with pytest.raises(DimMismatch):
        dict_from_dual(np.zeros((2, 3, 4)), np.zeros((3, 2, 4)), np.zeros(2))
    with pytest.raises(ValueError):
        dual_value_and_derivatives(np.ones((1, 2, 3)), np.ones((1, 2, 3)), [-1.0, 0.0])


def test_init_dictionary_unit_atoms():
    d = init_dictionary(6, 4, 5, random_state=3)
    np.testing.assert_allclose(atom_norms(d), 1.0)
    np.testing.assert_array_equal(d, init_dictionary(6, 4, 5, random_state=3))
