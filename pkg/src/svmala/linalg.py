"""Cholesky factors for symmetric tridiagonal and small dense SPD matrices.

Both factor types expose the same methods so the Langevin kernels can use
either metric: ``solve`` (G^-1 b), ``logdet``, ``quad`` (x' G x) and
``sample_precision`` (a draw with covariance G^-1 given standard normals).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .exceptions import NumericalError

__all__ = [
    "SymTridiag",
    "TridiagCholesky",
    "DenseCholesky",
    "NotPositiveDefinite",
    "chol_tridiag",
    "chol_dense",
    "factor_with_jitter",
    "solve",
    "logdet",
    "sample_gaussian_precision",
]


class NotPositiveDefinite(NumericalError):
    pass


@dataclass(frozen=True)
class SymTridiag:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float)
        off = np.asarray(self.offdiag, dtype=float)
        if diag.ndim != 1 or off.shape != (max(diag.size - 1, 0),):
            raise ValueError("offdiag must have length len(diag) - 1")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", off)

    @property
    def n(self) -> int:
        return self.diag.size

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.diag * x
        out[:-1] += self.offdiag * x[1:]
        out[1:] += self.offdiag * x[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def shifted(self, amount: float) -> "SymTridiag":
        return SymTridiag(self.diag + amount, self.offdiag)

    def trace(self) -> float:
        return float(self.diag.sum())


class TridiagCholesky:
    """Lower-bidiagonal ``L`` with ``L L' = G``; all operations are O(n)."""

    def __init__(self, matrix: SymTridiag):
        n = matrix.n
        ab = np.zeros((2, n))
        ab[0] = matrix.diag
        ab[1, : n - 1] = matrix.offdiag
        try:
            self._cb = sla.cholesky_banded(ab, lower=True, check_finite=True)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NotPositiveDefinite(str(exc)) from None
        self.matrix = matrix
        self.jitter = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.n

    @property
    def lower_diag(self) -> np.ndarray:
        return self._cb[0]

    @property
    def lower_sub(self) -> np.ndarray:
        return self._cb[1, : self.dim - 1]

    def to_dense(self) -> np.ndarray:
        return np.diag(self.lower_diag) + np.diag(self.lower_sub, -1)

    def _check(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dim:
            raise ValueError(f"expected length {self.dim}, got {b.shape[0]}")
        return b

    def solve(self, b) -> np.ndarray:
        return sla.cho_solve_banded((self._cb, True), self._check(b), check_finite=False)

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(self.lower_diag)))

    def lt_mul(self, x) -> np.ndarray:
        x = self._check(x)
        out = self.lower_diag * x
        out[:-1] += self.lower_sub * x[1:]
        return out

    def quad(self, x) -> float:
        v = self.lt_mul(x)
        return float(v @ v)

    def sample_precision(self, z) -> np.ndarray:
        """``L^-T z``: covariance ``G^-1`` when ``z`` is standard normal."""
        z = self._check(z)
        n = self.dim
        if n == 1:
            return z / self.lower_diag
        upper = np.zeros((2, n))
        upper[0, 1:] = self.lower_sub
        upper[1] = self.lower_diag
        return sla.solve_banded((0, 1), upper, z, check_finite=False)


class DenseCholesky:
    """Dense Cholesky for small SPD metrics (no pivoting)."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("metric must be square")
        if not np.isfinite(matrix.sum()):
            raise NotPositiveDefinite("metric has non-finite entries")
        try:
            self.lower = np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from None
        self.matrix = matrix
        self.jitter = 0.0
        # d <= 8: an explicit inverse of L is cheaper than repeated triangular solves
        self._inv_lower = np.linalg.inv(self.lower)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _check(self, b):
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.dim:
            raise ValueError(f"expected length {self.dim}, got {b.shape[0]}")
        return b

    def solve(self, b) -> np.ndarray:
        w = self._inv_lower @ self._check(b)
        return self._inv_lower.T @ w

    def logdet(self) -> float:
        return 2.0 * float(np.log(self.lower.diagonal()).sum())

    def lt_mul(self, x) -> np.ndarray:
        return self.lower.T @ self._check(x)

    def quad(self, x) -> float:
        v = self.lt_mul(x)
        return float(v @ v)

    def sample_precision(self, z) -> np.ndarray:
        return self._inv_lower.T @ self._check(z)


def chol_tridiag(matrix: SymTridiag) -> TridiagCholesky:
    return TridiagCholesky(matrix)


def chol_dense(matrix) -> DenseCholesky:
    return DenseCholesky(matrix)


def factor_with_jitter(matrix, max_doublings: int = 3):
    """Factor an SPD metric, adding a diagonal ridge if the first attempt fails.

    The ridge starts at ``1e-8 * trace / dim`` and doubles up to
    ``max_doublings`` times. The returned factor records the ridge used in
    ``.jitter``; :class:`NotPositiveDefinite` is raised if every attempt fails.
    """
    tridiag = isinstance(matrix, SymTridiag)
    make = TridiagCholesky if tridiag else DenseCholesky
    try:
        return make(matrix)
    except NotPositiveDefinite:
        pass
    if tridiag:
        scale = matrix.trace() / matrix.n
    else:
        matrix = np.asarray(matrix, dtype=float)
        scale = float(np.trace(matrix)) / matrix.shape[0]
    if not (np.isfinite(scale) and scale > 0.0):
        raise NotPositiveDefinite("metric trace is not positive")
    ridge = 1e-8 * scale
    for _ in range(max_doublings + 1):
        shifted = matrix.shifted(ridge) if tridiag else matrix + ridge * np.eye(matrix.shape[0])
        try:
            factor = make(shifted)
        except NotPositiveDefinite:
            ridge *= 2.0
            continue
        factor.jitter = ridge
        return factor
    raise NotPositiveDefinite("metric not positive definite after jitter")


def solve(factor, b) -> np.ndarray:
    return factor.solve(b)


def logdet(factor) -> float:
    return factor.logdet()


def sample_gaussian_precision(factor, rng: np.random.Generator) -> np.ndarray:
    """Draw from ``N(0, G^-1)`` using the factor of ``G``."""
    return factor.sample_precision(rng.standard_normal(factor.dim))
