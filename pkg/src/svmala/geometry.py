"""Analytic gradients and expected-information metrics for the SV model.

Two blocks are handled separately, matching the two-block sampler:

* the latent log-volatilities ``h`` given ``theta``; the gradient is ``s - r``
  with ``s`` the observation scores and ``r = Q h`` the AR(1) prior pull, and
  the metric is the constant tridiagonal matrix ``Q + c I``;
* the unconstrained parameters ``xi = (delta, gamma, alpha[, p])`` given ``h``;
  the gradient covers likelihood, prior and Jacobian, the metric is the
  expected Fisher information of the likelihood plus the prior curvature.

``fd_gradient`` is a Richardson-refined central difference used as the test
oracle for every analytic gradient here.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import Family, ged_lambda
from .exceptions import NumericalError
from .linalg import SymTridiag
from .model import (
    STUDENT_NU_FLOOR,
    STUDENT_PRIOR_RATE,
    ModelParams,
    TransformedParams,
    log1m_tanh2,
    nu_from_p,
    softplus,
)
from .special import digamma, log_gamma, trigamma

__all__ = [
    "ObsLaw",
    "HBlock",
    "grad_h",
    "ar_precision",
    "obs_curvature",
    "metric_h",
    "theta_value_and_grad",
    "grad_theta",
    "metric_theta",
    "ged_dlogscale",
    "fd_gradient",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


def ged_dlogscale(nu: float) -> float:
    """``nu * (nu / lam) * d lam / d nu`` = ln 2 - psi(1/nu)/2 + 3 psi(3/nu)/2."""
    return _LOG2 - 0.5 * digamma(1.0 / nu) + 1.5 * digamma(3.0 / nu)


class ObsLaw:
    """Per-observation log-density of standardized errors and its h-score.

    ``terms(eps)`` returns ``(logpdf, s)`` where ``s = d/dh [ln f(eps) - h/2]``
    for ``eps = y exp(-h/2) / beta``.
    """

    def __init__(self, kind, nu=None):
        self.kind = Family.parse(kind)
        self.nu = nu
        if self.kind is Family.GED:
            self.lam = ged_lambda(nu)
            self.log_norm = math.log(nu) - math.log(self.lam) - (1.0 + 1.0 / nu) * _LOG2 - log_gamma(1.0 / nu)
        elif self.kind is Family.STUDENT_T:
            self.log_norm = (
                log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) - 0.5 * math.log(math.pi * (nu - 2.0))
            )
        else:
            self.log_norm = -_HALF_LOG_2PI

    def terms(self, eps):
        if self.kind is Family.GAUSSIAN:
            e2 = eps * eps
            return self.log_norm - 0.5 * e2, 0.5 * e2 - 0.5
        if self.kind is Family.GED:
            z = np.abs(eps / self.lam) ** self.nu
            return self.log_norm - 0.5 * z, 0.25 * self.nu * z - 0.5
        nu = self.nu
        u = eps * eps / (nu - 2.0)
        return self.log_norm - 0.5 * (nu + 1.0) * np.log1p(u), 0.5 * (nu + 1.0) * u / (1.0 + u) - 0.5

    @property
    def curvature(self) -> float:
        """Expected observation information ``-E d^2/dh^2`` per time point."""
        if self.kind is Family.GAUSSIAN:
            return 0.5
        if self.kind is Family.GED:
            return 0.25 * self.nu
        return self.nu / (2.0 * (self.nu + 3.0))


def _ar_pull(h: np.ndarray, phi: float, sigma: float) -> np.ndarray:
    """``r = Q h`` for the AR(1) prior precision ``Q``."""
    inv_s2 = 1.0 / (sigma * sigma)
    n = h.size
    if n == 1:
        return (1.0 - phi * phi) * inv_s2 * h
    r = np.empty(n)
    r[0] = h[0] - phi * h[1]
    r[-1] = h[-1] - phi * h[-2]
    if n > 2:
        r[1:-1] = (1.0 + phi * phi) * h[1:-1] - phi * (h[:-2] + h[2:])
    return r * inv_s2


class HBlock:
    """Log-density of ``(y, h)`` as a function of ``h`` for fixed parameters."""

    def __init__(self, y, beta: float, phi: float, sigma: float, kind, nu=None):
        self.y = np.asarray(y, dtype=float)
        self.beta, self.phi, self.sigma = beta, phi, sigma
        self.law = ObsLaw(kind, nu)
        n = self.y.size
        self._const = -n * math.log(beta) - n * (_HALF_LOG_2PI + math.log(sigma)) + 0.5 * math.log1p(-phi * phi)

    @classmethod
    def from_params(cls, y, params: ModelParams) -> "HBlock":
        return cls(y, params.beta, params.phi, params.sigma, params.kind, params.nu)

    def __call__(self, h):
        h = np.asarray(h, dtype=float)
        eps = self.y * np.exp(-0.5 * h) / self.beta
        logpdf, s = self.law.terms(eps)
        r = _ar_pull(h, self.phi, self.sigma)
        # h' Q h = sum of squared standardized innovations times sigma^2
        value = float(logpdf.sum() - 0.5 * h.sum() - 0.5 * (h @ r)) + self._const
        return value, s - r

    def metric(self, h=None) -> SymTridiag:
        return metric_h(self.y.size, self.phi, self.sigma, self.law.curvature)


def grad_h(y, h, params: ModelParams) -> np.ndarray:
    """Gradient of ``ln f(y, h | theta)`` with respect to ``h``."""
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    if y.shape != h.shape:
        raise ValueError("y and h differ in shape")
    return HBlock.from_params(y, params)(h)[1]


def ar_precision(n: int, phi: float, sigma: float) -> SymTridiag:
    """Precision matrix of the stationary AR(1) path ``h_1..h_n``."""
    inv_s2 = 1.0 / (sigma * sigma)
    if n == 1:
        return SymTridiag(np.array([(1.0 - phi * phi) * inv_s2]), np.empty(0))
    diag = np.full(n, (1.0 + phi * phi) * inv_s2)
    diag[0] = diag[-1] = inv_s2
    return SymTridiag(diag, np.full(n - 1, -phi * inv_s2))


def obs_curvature(kind, nu=None) -> float:
    return ObsLaw(kind, nu).curvature


def metric_h(n: int, phi_or_params, sigma: float | None = None, curvature: float | None = None) -> SymTridiag:
    """Expected-information metric for ``h``: AR(1) precision plus ``c I``.

    Call as ``metric_h(n, params)`` or ``metric_h(n, phi, sigma, curvature)``.
    """
    if isinstance(phi_or_params, ModelParams):
        p = phi_or_params
        phi, sigma, curvature = p.phi, p.sigma, obs_curvature(p.kind, p.nu)
    else:
        phi = phi_or_params
    if n < 2:
        raise ValueError("metric_h needs n >= 2")
    q = ar_precision(n, phi, sigma)
    return SymTridiag(q.diag + curvature, q.offdiag)


def _unpack(xi, kind):
    kind = Family.parse(kind)
    if isinstance(xi, TransformedParams):
        xi = xi.to_array(kind)
    return kind, np.asarray(xi, dtype=float)


def theta_value_and_grad(y, h, xi, kind, parts: bool = False):
    """Log posterior kernel in ``xi`` for fixed ``h`` and its gradient.

    The value matches :func:`svmala.model.log_target`. With ``parts=True`` the
    gradient is returned as a dict with ``likelihood``, ``prior`` and
    ``jacobian`` components instead of their sum.
    """
    kind, xi = _unpack(xi, kind)
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    n = y.size
    delta, gam, alpha = float(xi[0]), float(xi[1]), float(xi[2])
    beta, sigma, phi = math.exp(delta), math.exp(gam), math.tanh(alpha)
    inv_s2 = math.exp(-2.0 * gam)
    l1m = log1m_tanh2(alpha)
    one_m_phi2 = math.exp(l1m)
    nu = nu_from_p(float(xi[3]), kind) if kind.has_tail else None
    if nu is not None and not math.isfinite(nu):
        raise NumericalError("tail parameter overflowed")

    law = ObsLaw(kind, nu)
    eps = y * np.exp(-0.5 * h) / beta
    logpdf, s = law.terms(eps)

    innov = h[1:] - phi * h[:-1]
    ss_innov = float(innov @ innov)
    h1sq = h[0] * h[0]
    quad = (one_m_phi2 * h1sq + ss_innov) * inv_s2

    lik_value = float(logpdf.sum() - 0.5 * h.sum()) - n * delta
    lik_value += -n * (_HALF_LOG_2PI + gam) + 0.5 * l1m - 0.5 * quad

    g_lik = np.zeros(xi.size)
    g_lik[0] = 2.0 * float(s.sum())
    g_lik[1] = -n + quad
    g_lik[2] = -phi + phi * one_m_phi2 * h1sq * inv_s2 + one_m_phi2 * inv_s2 * float(h[:-1] @ innov)

    one_m_phi = 2.0 * math.exp(-softplus(2.0 * alpha))
    one_p_phi = 2.0 * math.exp(-softplus(-2.0 * alpha))
    prior_value = -beta - 0.25 * inv_s2 - 11.0 * gam - 19.0 * softplus(-2.0 * alpha) - 0.5 * softplus(2.0 * alpha)
    g_prior = np.zeros(xi.size)
    g_prior[0] = -beta
    g_prior[1] = 0.5 * inv_s2 - 11.0
    g_prior[2] = 19.0 * one_m_phi - 0.5 * one_p_phi

    g_jac = np.ones(xi.size)
    g_jac[2] = -2.0 * phi
    jac_value = delta + gam + l1m

    if kind is Family.GED:
        p = float(xi[3])
        lam = law.lam
        k = ged_dlogscale(nu)
        z = np.abs(eps / lam) ** nu
        with np.errstate(divide="ignore"):
            log_z = nu * (np.log(np.abs(eps)) - math.log(lam))
        zlogz = np.where(z > 0.0, z * np.where(np.isfinite(log_z), log_z, 0.0), 0.0)
        g_lik[3] = (n / nu) * (nu - k + digamma(1.0 / nu) + _LOG2) - 0.5 * float(np.sum(zlogz - k * z))
        prior_value += -4.0 / nu - 3.0 * p
        g_prior[3] = 4.0 / nu - 3.0
        jac_value += p
    elif kind is Family.STUDENT_T:
        p = float(xi[3])
        u = eps * eps / (nu - 2.0)
        scaled = (
            n * (digamma(0.5 * (nu + 1.0)) - digamma(0.5 * nu) - 1.0 / (nu - 2.0))
            + (nu + 1.0) / (nu - 2.0) * float(np.sum(u / (1.0 + u)))
            - float(np.sum(np.log1p(u)))
        )
        # the scaled form is (2 / (nu - 4)) dL/dp
        g_lik[3] = 0.5 * (nu - STUDENT_NU_FLOOR) * scaled
        prior_value += math.log(STUDENT_PRIOR_RATE) - STUDENT_PRIOR_RATE * (nu - STUDENT_NU_FLOOR)
        g_prior[3] = -STUDENT_PRIOR_RATE * (nu - STUDENT_NU_FLOOR)
        jac_value += p

    value = lik_value + prior_value + jac_value
    if parts:
        return value, {"likelihood": g_lik, "prior": g_prior, "jacobian": g_jac}
    return value, g_lik + g_prior + g_jac


def grad_theta(y, h, xi, kind) -> np.ndarray:
    """Gradient of the unconstrained-space target with respect to ``xi``."""
    return theta_value_and_grad(y, h, xi, kind)[1]


def _ged_p_information(nu: float) -> float:
    # per-observation Fisher information for p = ln(nu), from 0.5|e/lam|^nu ~ Gamma(1/nu)
    a = 1.0 / nu
    c = 1.0 + digamma(1.0 + a) + _LOG2 - ged_dlogscale(nu)
    return a * (c * c - 1.0 + (1.0 + a) * trigamma(1.0 + a))


def metric_theta(xi, n: int, kind, include_prior: bool = True) -> np.ndarray:
    """Expected negative Hessian of the target in ``xi``.

    Likelihood entries are Fisher informations with ``h`` integrated over its
    stationary law; prior entries are the curvature of the log prior in
    ``gamma``, ``alpha`` and ``p``. The beta prior contributes nothing.
    """
    kind, xi = _unpack(xi, kind)
    if n < 1:
        raise ValueError("n must be positive")
    sigma = math.exp(float(xi[1]))
    phi = math.tanh(float(xi[2]))
    one_m_phi2 = math.exp(log1m_tanh2(float(xi[2])))
    d = xi.size
    g = np.zeros((d, d))

    g[1, 1] = 2.0 * n
    g[1, 2] = g[2, 1] = 2.0 * phi
    g[2, 2] = 2.0 * phi * phi + (n - 1) * one_m_phi2

    if kind is Family.GAUSSIAN:
        g[0, 0] = 2.0 * n
    elif kind is Family.GED:
        nu = nu_from_p(float(xi[3]), kind)
        g[0, 0] = n * nu
        g[0, 3] = g[3, 0] = -n * (1.0 + digamma(1.0 + 1.0 / nu) + _LOG2 - ged_dlogscale(nu))
        g[3, 3] = n * _ged_p_information(nu)
    else:
        nu = nu_from_p(float(xi[3]), kind)
        m = nu - STUDENT_NU_FLOOR
        g[0, 0] = 2.0 * n * nu / (nu + 3.0)
        g[0, 3] = g[3, 0] = 6.0 * n * m / ((nu - 2.0) * (nu + 1.0) * (nu + 3.0))
        bracket = (nu - 3.0) * (nu + 4.0) / ((nu + 1.0) * (nu + 3.0)) + 0.5 * (nu - 2.0) ** 2 * (
            trigamma(0.5 * (nu + 1.0)) - trigamma(0.5 * nu)
        )
        g[3, 3] = -0.5 * n * m * m / (nu - 2.0) ** 2 * bracket

    if include_prior:
        g[1, 1] += 1.0 / (sigma * sigma)
        g[2, 2] += 19.5 * one_m_phi2
        if kind is Family.GED:
            g[3, 3] += 4.0 / nu
        elif kind is Family.STUDENT_T:
            g[3, 3] += STUDENT_PRIOR_RATE * (nu - STUDENT_NU_FLOOR)
    return g


def fd_gradient(f, x, step: float = 1e-3) -> np.ndarray:
    """Central-difference gradient with one Richardson refinement.

    Per-coordinate step is ``step * max(1, |x_i|)``; truncation error is
    O(step^4) on smooth ``f``.
    """
    x = np.array(x, dtype=float)
    grad = np.empty(x.size)
    for i in range(x.size):
        hi = step * max(1.0, abs(x[i]))

        def central(delta):
            xp = x.copy()
            xm = x.copy()
            xp[i] += delta
            xm[i] -= delta
            fp, fm = f(xp), f(xm)
            if not (math.isfinite(fp) and math.isfinite(fm)):
                raise NumericalError(f"non-finite evaluation at coordinate {i}")
            return (fp - fm) / (2.0 * delta)

        coarse = central(hi)
        fine = central(0.5 * hi)
        grad[i] = (4.0 * fine - coarse) / 3.0
    return grad
