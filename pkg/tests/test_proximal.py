import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nnlrs.proximal import (
    l1_norm,
    l21_norm,
    l21_shrink,
    nuclear_norm,
    numerical_rank,
    soft_threshold,
    spectral_norm_sq,
    svd,
    svt,
)
from nnlrs.selftest import run_operator_checks

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
matrices = st.tuples(st.integers(1, 6), st.integers(1, 6)).flatmap(lambda s: arrays(np.float64, s, elements=finite))
taus = st.floats(0, 10, allow_nan=False)


@pytest.mark.parametrize("check", run_operator_checks(), ids=lambda c: c.name)
def test_worked_examples(check):
    assert check.passed, check.detail


def test_soft_threshold_examples():
    assert np.allclose(soft_threshold([[1.2]], 0.5), [[0.7]], rtol=0, atol=1e-15)
    assert np.array_equal(soft_threshold([[-0.3]], 0.5), [[0.0]])
    assert np.array_equal(soft_threshold([[-2.0, 3.0]], 1.0), [[-1.0, 2.0]])


def test_l21_examples():
    assert np.allclose(l21_shrink(np.array([[3.0], [4.0]]), 1.0), [[2.4], [3.2]], atol=1e-12)
    assert np.array_equal(l21_shrink(np.array([[3.0], [4.0]]), 5.0), [[0.0], [0.0]])


def test_zero_column_stays_zero():
    M = np.array([[0.0, 1.0], [0.0, 2.0]])
    out = l21_shrink(M, 0.1)
    assert np.array_equal(out[:, 0], [0.0, 0.0])


@pytest.mark.parametrize("op", [soft_threshold, svt, l21_shrink])
def test_negative_threshold_rejected(op):
    with pytest.raises(ValueError):
        op(np.eye(2), -0.1)


@pytest.mark.parametrize("op", [soft_threshold, svt, l21_shrink])
def test_inputs_not_modified(op, rng):
    M = rng.standard_normal((4, 3))
    keep = M.copy()
    op(M, 0.5)
    assert np.array_equal(M, keep)


def test_svd_sign_convention(rng):
    M = rng.standard_normal((5, 4))
    U, s, Vt = svd(M)
    assert np.allclose((U * s) @ Vt, M, atol=1e-12)
    for j in range(U.shape[1]):
        lead = U[np.flatnonzero(np.abs(U[:, j]) > np.finfo(float).eps)[0], j]
        assert lead >= 0
    U2, _, Vt2 = svd(-M)
    # flipping the input flips exactly one factor, never U's leading sign
    assert np.allclose(U2, U, atol=1e-12)
    assert np.allclose(Vt2, -Vt, atol=1e-12)


def test_spectral_norm_examples(rng):
    assert spectral_norm_sq(np.eye(3)) == pytest.approx(1.0, abs=1e-12)
    assert spectral_norm_sq(np.diag([2.0, 1.0])) == pytest.approx(4.0, abs=1e-12)
    M = rng.standard_normal((10, 8))
    assert spectral_norm_sq(M) == pytest.approx(np.linalg.svd(M, compute_uv=False)[0] ** 2, rel=1e-6)


def test_spectral_norm_repeated_top_singular_value():
    # degenerate top eigenspace plus a start vector the residual check has to rescue
    A = np.diag([3.0, 3.0, 1.0])
    assert spectral_norm_sq(A) == pytest.approx(9.0, rel=1e-9)
    assert spectral_norm_sq(np.zeros((3, 2))) == 0.0
    with pytest.raises(ValueError):
        spectral_norm_sq(np.zeros((0, 3)))


def test_norms():
    assert nuclear_norm(np.diag([3.0, 4.0])) == pytest.approx(7.0)
    assert l1_norm(np.array([[-1.0, 2.0]])) == 3.0
    assert l21_norm(np.array([[3.0, 0.0], [4.0, 1.0]])) == pytest.approx(6.0)
    assert numerical_rank(np.diag([1.0, 1e-13])) == 1


def _gain(M, X, tau, pen, D):
    f = lambda Y: 0.5 * np.sum((Y - M) ** 2) + tau * pen(Y)
    return f(X + D) - f(X)


@settings(max_examples=60, deadline=None)
@given(matrices, taus, st.integers(0, 2**32 - 1))
def test_prox_outputs_are_minimizers(M, tau, seed):
    r = np.random.default_rng(seed)
    for prox, pen in ((soft_threshold, l1_norm), (svt, nuclear_norm), (l21_shrink, l21_norm)):
        X = prox(M, tau)
        for eps in (1e-2, 1e-4):
            D = r.standard_normal(M.shape)
            D *= eps / max(np.linalg.norm(D), 1e-300)
            assert _gain(M, X, tau, pen, D) >= -1e-9 * max(1.0, np.abs(M).max() ** 2)


@settings(max_examples=60, deadline=None)
@given(matrices, taus)
def test_svt_shrinks_spectrum(M, tau):
    s = np.linalg.svd(M, compute_uv=False)
    out = np.linalg.svd(svt(M, tau), compute_uv=False)
    assert np.allclose(out, np.maximum(s - tau, 0.0), atol=1e-9 * max(1.0, s[0]))


@settings(max_examples=60, deadline=None)
@given(matrices)
def test_zero_threshold_is_identity(M):
    assert np.array_equal(soft_threshold(M, 0.0), M)
    assert np.array_equal(l21_shrink(M, 0.0), M)
    assert np.allclose(svt(M, 0.0), M, atol=1e-10 * max(1.0, np.abs(M).max()))


@settings(max_examples=60, deadline=None)
@given(matrices, taus)
def test_shrinkage_never_grows_norms(M, tau):
    assert l1_norm(soft_threshold(M, tau)) <= l1_norm(M) + 1e-12
    assert l21_norm(l21_shrink(M, tau)) <= l21_norm(M) + 1e-12
    assert nuclear_norm(svt(M, tau)) <= nuclear_norm(M) + 1e-9
