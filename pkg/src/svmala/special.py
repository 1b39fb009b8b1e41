"""Log-gamma, digamma and trigamma for positive real arguments.

Scalar implementations. Log-gamma uses the Lanczos approximation (g=7, 9
terms) away from its roots and a Taylor series about 2 on [0.5, 2.5].
Digamma and trigamma use upward recurrence into the asymptotic regime and the
Bernoulli-number series; digamma switches to a Taylor series near its positive
root so relative accuracy holds there too."""

from __future__ import annotations

import math

from .exceptions import DomainError

__all__ = ["log_gamma", "digamma", "trigamma"]

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# zeta(k) - 1 for k = 2..32, coefficients of the Taylor series of lnΓ about 2
_ZETA_MINUS_ONE = (
    0.64493406684822644, 0.20205690315959429, 0.082323233711138192,
    0.036927755143369926, 0.01734306198444914, 0.0083492773819228268,
    0.0040773561979443394, 0.0020083928260822144, 0.00099457512781808534,
    0.00049418860411946456, 0.0002460865533080483, 0.00012271334757848915,
    6.1248135058704829e-5, 3.0588236307020494e-5, 1.5282259408651872e-5,
    7.6371976378997623e-6, 3.8172932649998399e-6, 1.9082127165539389e-6,
    9.5396203387279611e-7, 4.7693298678780646e-7, 2.3845050272773299e-7,
    1.1921992596531107e-7, 5.960818905125948e-8, 2.980350351465228e-8,
    1.4901554828365041e-8, 7.4507117898354295e-9, 3.7253340247884571e-9,
    1.862659723513049e-9, 9.3132743241966818e-10, 4.6566290650337841e-10,
    2.3283118336765055e-10,
)
_EULER_GAMMA = 0.57721566490153286

# positive root of digamma as hi + lo, and Taylor coefficients psi^(k)(root)/k!
_DIGAMMA_ROOT_HI = 1.4616321449683622
_DIGAMMA_ROOT_LO = 9.549995429965697e-17
_DIGAMMA_ROOT_COEF = (
    0.96767224544762117, -0.44276316898359211, 0.25849976095565101,
    -0.16394270544240653, 0.10782405069126237, -0.072199561256454711,
    0.048804288164143107, -0.033161126474847359, 0.022597648232218105,
    -0.015424765904948959, 0.010538791616612175, -0.0072045343863568682,
    0.0049267813957298534, -0.0033698016554393281, 0.0023051263267349278,
    -0.0015769367714301973, 0.0010788252019162966, -0.00073807093899600513,
    0.00050495326583460204, -0.0003454680251063077, 0.00023635601564027053,
    -0.00016170622091974803,
)

# asymptotic regime threshold for the polygamma series
_ASYMPTOTIC_X = 10.0


def _check(x: float) -> float:
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"argument must be a finite positive real, got {x!r}")
    return x


def _log_gamma_near_two(t: float) -> float:
    # lnΓ(2+t) for |t| <= 0.5; exact zero at t=0 keeps relative accuracy at the root
    acc = 0.0
    for k in range(len(_ZETA_MINUS_ONE) + 1, 1, -1):
        acc = acc * -t + _ZETA_MINUS_ONE[k - 2] / k
    return t * ((1.0 - _EULER_GAMMA) + t * acc)


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = _check(x)
    if x < 0.5:
        return log_gamma(x + 1.0) - math.log(x)
    if x < 1.5:
        return _log_gamma_near_two(x - 1.0) - math.log1p(x - 1.0)
    if x <= 2.5:
        return _log_gamma_near_two(x - 2.0)
    z = x - 1.0
    a = _LANCZOS_COEF[0]
    for i in range(1, 9):
        a += _LANCZOS_COEF[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(a)


def digamma(x: float) -> float:
    """Digamma function psi(x) = d/dx lnΓ(x) for ``x > 0``."""
    x = _check(x)
    t = (x - _DIGAMMA_ROOT_HI) - _DIGAMMA_ROOT_LO
    if abs(t) < 0.15:
        acc = 0.0
        for c in reversed(_DIGAMMA_ROOT_COEF):
            acc = acc * t + c
        return acc * t
    shift = 0.0
    while x < _ASYMPTOTIC_X:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = inv2 * (
        1.0 / 12
        - inv2 * (1.0 / 120
        - inv2 * (1.0 / 252
        - inv2 * (1.0 / 240
        - inv2 * (1.0 / 132
        - inv2 * (691.0 / 32760
        - inv2 / 12)))))
    )
    return shift + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """Trigamma function psi_1(x) = d^2/dx^2 lnΓ(x) for ``x > 0``."""
    x = _check(x)
    shift = 0.0
    while x < _ASYMPTOTIC_X:
        shift += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv + 0.5 * inv2 + inv * inv2 * (
        1.0 / 6
        - inv2 * (1.0 / 30
        - inv2 * (1.0 / 42
        - inv2 * (1.0 / 30
        - inv2 * (5.0 / 66
        - inv2 * (691.0 / 2730
        - inv2 * 7.0 / 6)))))
    )
    return shift + series
