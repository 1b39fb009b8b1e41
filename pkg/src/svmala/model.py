"""Stochastic volatility model with Gaussian, GED or Student-t errors.

    y_t = beta * exp(h_t / 2) * eps_t
    h_t = phi * h_{t-1} + eta_t,      eta_t ~ N(0, sigma^2)

with ``h_1`` drawn from the stationary law ``N(0, sigma^2 / (1 - phi^2))``.

Samplers work on the unconstrained vector ``xi = (delta, gamma, alpha[, p])``
with ``beta = exp(delta)``, ``sigma = exp(gamma)``, ``phi = tanh(alpha)`` and
``nu = exp(p)`` (GED) or ``nu = exp(p) + 4`` (Student-t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .distributions import ErrorFamily, Family, sample_error
from .exceptions import DomainError

__all__ = [
    "ModelParams",
    "TransformedParams",
    "ReturnSeries",
    "STUDENT_NU_FLOOR",
    "STUDENT_PRIOR_RATE",
    "to_unconstrained",
    "from_unconstrained",
    "theta_to_xi",
    "xi_to_theta",
    "log_jacobian",
    "log_joint",
    "log_prior",
    "log_prior_values",
    "log_target",
    "simulate",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)

# truncated exponential prior on the Student-t dof: rate * exp(-rate * (nu - floor))
STUDENT_NU_FLOOR = 4.0
STUDENT_PRIOR_RATE = 1.0 / 3.0


@dataclass(frozen=True)
class ModelParams:
    """Natural-scale SV parameters; the tail parameter lives in ``family``."""

    beta: float
    phi: float
    sigma: float
    family: ErrorFamily

    def __post_init__(self):
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not abs(self.phi) < 1.0:
            raise DomainError(f"|phi| must be below one, got {self.phi}")
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        for name in ("beta", "phi", "sigma"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def kind(self) -> Family:
        return self.family.kind

    @property
    def nu(self) -> float | None:
        return self.family.nu

    @classmethod
    def build(cls, beta, phi, sigma, kind="gaussian", nu=None) -> "ModelParams":
        return cls(beta, phi, sigma, ErrorFamily(Family.parse(kind), nu))

    def as_tuple(self) -> tuple[float, float, float, float]:
        """``(beta, phi, sigma, nu)`` with ``nu = nan`` for Gaussian errors."""
        nu = math.nan if self.nu is None else self.nu
        return self.beta, self.phi, self.sigma, nu


@dataclass(frozen=True)
class TransformedParams:
    delta: float
    gamma_: float
    alpha: float
    p: float = 0.0

    def to_array(self, kind) -> np.ndarray:
        if Family.parse(kind).has_tail:
            return np.array([self.delta, self.gamma_, self.alpha, self.p])
        return np.array([self.delta, self.gamma_, self.alpha])

    @classmethod
    def from_array(cls, xi) -> "TransformedParams":
        xi = np.asarray(xi, dtype=float)
        p = float(xi[3]) if xi.size > 3 else 0.0
        return cls(float(xi[0]), float(xi[1]), float(xi[2]), p)


@dataclass(frozen=True)
class ReturnSeries:
    """Percent log-returns with optional date labels."""

    values: np.ndarray
    dates: tuple | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise DomainError("a return series needs at least two observations")
        if not np.all(np.isfinite(values)):
            raise DomainError("return series contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.dates is not None and len(self.dates) != values.size:
            raise DomainError("dates and values differ in length")

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def nu_from_p(p: float, kind) -> float | None:
    kind = Family.parse(kind)
    if kind is Family.GED:
        return math.exp(p)
    if kind is Family.STUDENT_T:
        return math.exp(p) + STUDENT_NU_FLOOR
    return None


def p_from_nu(nu: float, kind) -> float:
    kind = Family.parse(kind)
    if kind is Family.GED:
        return math.log(nu)
    if kind is Family.STUDENT_T:
        return math.log(nu - STUDENT_NU_FLOOR)
    return 0.0


def theta_to_xi(beta, phi, sigma, nu, kind) -> np.ndarray:
    xi = [math.log(beta), math.log(sigma), math.atanh(phi)]
    if Family.parse(kind).has_tail:
        xi.append(p_from_nu(nu, kind))
    return np.array(xi)


def xi_to_theta(xi, kind) -> tuple[float, float, float, float]:
    """``(beta, phi, sigma, nu)`` from an unconstrained array; nu is nan for Gaussian."""
    beta = math.exp(xi[0])
    sigma = math.exp(xi[1])
    phi = math.tanh(xi[2])
    nu = nu_from_p(xi[3], kind) if Family.parse(kind).has_tail else math.nan
    return beta, phi, sigma, nu


def to_unconstrained(params: ModelParams) -> TransformedParams:
    return TransformedParams.from_array(theta_to_xi(*params.as_tuple(), params.kind))


def from_unconstrained(xi, kind) -> ModelParams:
    if isinstance(xi, TransformedParams):
        xi = xi.to_array(kind)
    beta, phi, sigma, nu = xi_to_theta(np.asarray(xi, dtype=float), kind)
    kind = Family.parse(kind)
    return ModelParams(beta, phi, sigma, ErrorFamily(kind, nu if kind.has_tail else None))


def _as_xi(xi, kind) -> np.ndarray:
    if isinstance(xi, TransformedParams):
        return xi.to_array(kind)
    return np.asarray(xi, dtype=float)


def softplus(x: float) -> float:
    """``log(1 + exp(x))`` for a scalar."""
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def log1m_tanh2(alpha: float) -> float:
    """``log(1 - tanh(alpha)**2)`` without cancellation for large ``|alpha|``."""
    a = abs(alpha)
    return 2.0 * _LOG2 - 2.0 * a - 2.0 * math.log1p(math.exp(-2.0 * a))


def log_jacobian(xi, kind) -> float:
    """Log of ``|d theta / d xi|`` = ln beta + ln sigma + ln(1 - phi^2) + ln(d nu / d p)."""
    kind = Family.parse(kind)
    xi = _as_xi(xi, kind)
    out = xi[0] + xi[1] + log1m_tanh2(xi[2])
    if kind.has_tail:
        # d nu/dp equals exp(p) for both the GED and the shifted Student-t map
        out += xi[3]
    return float(out)


def _check_dims(y, h):
    y = np.asarray(y, dtype=float)
    h = np.asarray(h, dtype=float)
    if y.ndim != 1 or y.shape != h.shape:
        raise ValueError(f"y and h must be 1-d with equal length, got {y.shape} and {h.shape}")
    return y, h


def _ar1_logdensity(h: np.ndarray, phi: float, sigma: float, log1m_phi2: float | None = None) -> float:
    if log1m_phi2 is None:
        log1m_phi2 = math.log1p(-phi * phi)
    n = h.size
    one_m_phi2 = math.exp(log1m_phi2)
    innov = h[1:] - phi * h[:-1]
    quad = one_m_phi2 * h[0] * h[0] + float(innov @ innov)
    return -n * (_HALF_LOG_2PI + math.log(sigma)) + 0.5 * log1m_phi2 - 0.5 * quad / (sigma * sigma)


def log_joint(y, h, params: ModelParams) -> float:
    """``ln f(y, h | theta)``, normalizing constants included."""
    y, h = _check_dims(y, h)
    eps = y * np.exp(-0.5 * h) / params.beta
    obs = params.family.logpdf(eps) - 0.5 * h - math.log(params.beta)
    return float(np.sum(obs)) + _ar1_logdensity(h, params.phi, params.sigma)


def log_prior_values(beta, phi, sigma, nu, kind) -> float:
    """Log prior on the natural scale; ``-inf`` off the support.

    beta ~ Exp(1), sigma^2 ~ Inv-chi^2(10, 0.05) (written as a density in
    sigma), (phi+1)/2 ~ Beta(20, 1.5); the nu term is -4/nu - 3 ln nu for GED
    and a rate-1/3 exponential on nu - 4 for Student-t.
    """
    kind = Family.parse(kind)
    if not (beta > 0.0 and sigma > 0.0 and abs(phi) < 1.0):
        return -math.inf
    out = (
        -beta
        - 0.25 / (sigma * sigma)
        - 11.0 * math.log(sigma)
        + 19.0 * math.log(0.5 * (1.0 + phi))
        + 0.5 * math.log(0.5 * (1.0 - phi))
    )
    if kind is Family.GED:
        if not nu > 0.0:
            return -math.inf
        out += -4.0 / nu - 3.0 * math.log(nu)
    elif kind is Family.STUDENT_T:
        if not nu >= STUDENT_NU_FLOOR:
            return -math.inf
        out += math.log(STUDENT_PRIOR_RATE) - STUDENT_PRIOR_RATE * (nu - STUDENT_NU_FLOOR)
    return out


def log_prior(params: ModelParams) -> float:
    return log_prior_values(*params.as_tuple(), params.kind)


def log_target(y, h, xi, kind) -> float:
    """Posterior kernel in unconstrained coordinates for fixed ``h``.

    ``ln f(y, h | theta) + ln pi(theta) + ln |d theta / d xi|``, evaluated in
    forms that stay finite for extreme ``alpha``.
    """
    kind = Family.parse(kind)
    xi = _as_xi(xi, kind)
    y, h = _check_dims(y, h)
    delta, gam, alpha = float(xi[0]), float(xi[1]), float(xi[2])
    beta, sigma, phi = math.exp(delta), math.exp(gam), math.tanh(alpha)
    nu = nu_from_p(float(xi[3]), kind) if kind.has_tail else None
    family = ErrorFamily(kind, nu)

    l1m = log1m_tanh2(alpha)
    eps = y * np.exp(-0.5 * h) / beta
    obs = float(np.sum(family.logpdf(eps) - 0.5 * h)) - y.size * delta
    lik = obs + _ar1_logdensity(h, phi, sigma, l1m)

    prior = (
        -beta
        - 0.25 * math.exp(-2.0 * gam)
        - 11.0 * gam
        - 19.0 * softplus(-2.0 * alpha)
        - 0.5 * softplus(2.0 * alpha)
    )
    if kind is Family.GED:
        prior += -4.0 / nu - 3.0 * xi[3]
    elif kind is Family.STUDENT_T:
        prior += math.log(STUDENT_PRIOR_RATE) - STUDENT_PRIOR_RATE * (nu - STUDENT_NU_FLOOR)
    return float(lik + prior + log_jacobian(xi, kind))


def simulate(params: ModelParams, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``(y, h)`` of length ``n``; ``h_1`` comes from the stationary law."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eta = params.sigma * rng.standard_normal(n)
    eta[0] /= math.sqrt(1.0 - params.phi * params.phi)
    h = lfilter([1.0], [1.0, -params.phi], eta)
    eps = sample_error(params.family, rng, n)
    y = params.beta * np.exp(0.5 * h) * eps
    return y, h
