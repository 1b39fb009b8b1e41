import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from svmala.linalg import (
    DenseCholesky,
    NotPositiveDefinite,
    SymTridiag,
    chol_dense,
    chol_tridiag,
    factor_with_jitter,
    logdet,
    sample_gaussian_precision,
    solve,
)


def _random_pd(rng, n):
    off = rng.normal(size=n - 1)
    diag = np.abs(rng.normal(size=n)) + 0.1
    diag[:-1] += np.abs(off)
    diag[1:] += np.abs(off)
    return SymTridiag(diag, off)


def test_identity():
    g = SymTridiag(np.ones(4), np.zeros(3))
    f = chol_tridiag(g)
    assert np.array_equal(f.to_dense(), np.eye(4))
    b = np.arange(4.0)
    assert np.allclose(solve(f, b), b) and logdet(f) == 0.0


def test_two_by_two_hand_values():
    f = chol_tridiag(SymTridiag([2.0, 2.0], [1.0]))
    expect = np.array([[math.sqrt(2), 0], [1 / math.sqrt(2), math.sqrt(1.5)]])
    assert np.allclose(f.to_dense(), expect, atol=1e-15)
    assert logdet(f) == pytest.approx(math.log(3.0), abs=1e-15)


def test_reconstruction_large():
    rng = np.random.default_rng(1)
    g = _random_pd(rng, 2000)
    f = chol_tridiag(g)
    # L L' assembled from the bidiagonal factor in O(n)
    d, s = f.lower_diag, f.lower_sub
    diag = d * d
    diag[1:] += s * s
    err = max(np.max(np.abs(diag - g.diag)), np.max(np.abs(s * d[:-1] - g.offdiag)))
    assert err < 1e-10 * np.max(np.abs(g.diag))


@given(st.integers(1, 60), st.integers(0, 10_000))
def test_solve_matvec_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    g = _random_pd(rng, max(n, 2))
    x = rng.normal(size=g.n)
    f = chol_tridiag(g)
    assert np.allclose(f.solve(g.matvec(x)), x, rtol=1e-10, atol=1e-10)
    dense = g.to_dense()
    assert logdet(f) == pytest.approx(np.linalg.slogdet(dense)[1], abs=1e-9)
    assert f.quad(x) == pytest.approx(float(x @ dense @ x), rel=1e-10)


def test_solve_large():
    rng = np.random.default_rng(2)
    g = _random_pd(rng, 10_000)
    x = rng.normal(size=g.n)
    assert np.allclose(chol_tridiag(g).solve(g.matvec(x)), x, rtol=1e-10, atol=1e-10)


def test_sample_covariance_and_whitening():
    rng = np.random.default_rng(3)
    g = SymTridiag([2.0, 3.0, 2.5], [0.8, -0.6])
    f = chol_tridiag(g)
    z = rng.standard_normal((100_000, 3))
    draws = np.array([f.sample_precision(r) for r in z[:20000]])
    cov_ref = np.linalg.inv(g.to_dense())
    cov = np.cov(draws.T)
    # se of a covariance entry is about sqrt((s_ii s_jj + s_ij^2) / N)
    se = np.sqrt((np.outer(np.diag(cov_ref), np.diag(cov_ref)) + cov_ref**2) / draws.shape[0])
    assert np.all(np.abs(cov - cov_ref) < 3.5 * se)
    white = np.array([f.lt_mul(x) for x in draws])
    assert np.allclose(np.cov(white.T), np.eye(3), atol=0.04)


def test_sample_identity_metric():
    rng = np.random.default_rng(4)
    f = chol_tridiag(SymTridiag(np.ones(3), np.zeros(2)))
    draws = np.array([sample_gaussian_precision(f, rng) for _ in range(20000)])
    assert np.allclose(np.cov(draws.T), np.eye(3), atol=0.04)


def test_not_pd_and_jitter():
    with pytest.raises(NotPositiveDefinite):
        chol_tridiag(SymTridiag([1.0, 1.0], [2.0]))
    # singular but PSD: the ridge rescues it
    f = factor_with_jitter(SymTridiag([1.0, 1.0], [1.0]))
    assert f.jitter > 0
    with pytest.raises(NotPositiveDefinite):
        factor_with_jitter(SymTridiag([1.0, 1.0], [3.0]))
    d = factor_with_jitter(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert isinstance(d, DenseCholesky) and d.jitter > 0
    assert factor_with_jitter(np.eye(3)).jitter == 0.0


def test_dimension_mismatch():
    f = chol_tridiag(SymTridiag([2.0, 2.0], [1.0]))
    with pytest.raises(ValueError):
        f.solve(np.ones(3))
    with pytest.raises(ValueError):
        SymTridiag([1.0, 2.0], [1.0, 1.0])


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_dense_matches_numpy(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    g = a @ a.T + d * np.eye(d)
    f = chol_dense(g)
    b = rng.normal(size=d)
    assert np.allclose(f.solve(b), np.linalg.solve(g, b), rtol=1e-10, atol=1e-12)
    assert f.logdet() == pytest.approx(np.linalg.slogdet(g)[1], abs=1e-10)
    z = rng.normal(size=d)
    x = f.sample_precision(z)
    assert np.allclose(f.lower.T @ x, z, atol=1e-10)


def _time(fn, repeat=5):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def test_linear_time_ratio():
    rng = np.random.default_rng(5)
    small, big = _random_pd(rng, 20_000), _random_pd(rng, 200_000)
    xs, xb = rng.normal(size=small.n), rng.normal(size=big.n)

    def work(g, x):
        f = chol_tridiag(g)
        f.solve(x)
        f.sample_precision(x)
        f.logdet()

    ratio = _time(lambda: work(big, xb)) / _time(lambda: work(small, xs))
    assert ratio < 15.0
