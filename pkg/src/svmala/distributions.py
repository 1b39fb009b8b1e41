"""Zero-mean, unit-variance error laws: Gaussian, GED and Student-t.

The GED (exponential power) density is

    f(e) = nu / (lam * 2**(1 + 1/nu) * Gamma(1/nu)) * exp(-0.5 * |e/lam|**nu)

with ``lam**2 = 2**(-2/nu) * Gamma(1/nu) / Gamma(3/nu)``, and the Student-t is
the standard t with ``nu`` degrees of freedom rescaled by ``sqrt((nu-2)/nu)``.
Both have variance one for every admissible ``nu``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .special import log_gamma

__all__ = [
    "Family",
    "ErrorFamily",
    "ged_lambda",
    "ged_kurtosis",
    "normal_logpdf",
    "ged_logpdf",
    "student_logpdf",
    "sample_error",
]

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)


class Family(str, enum.Enum):
    GAUSSIAN = "gaussian"
    GED = "ged"
    STUDENT_T = "t"

    @classmethod
    def parse(cls, name: "str | Family") -> "Family":
        if isinstance(name, Family):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {
            "gaussian": cls.GAUSSIAN,
            "normal": cls.GAUSSIAN,
            "ged": cls.GED,
            "t": cls.STUDENT_T,
            "student": cls.STUDENT_T,
            "student-t": cls.STUDENT_T,
            "studentt": cls.STUDENT_T,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown error family {name!r}") from None

    @property
    def has_tail(self) -> bool:
        return self is not Family.GAUSSIAN


@dataclass(frozen=True)
class ErrorFamily:
    """An error law together with its tail parameter.

    ``nu`` is ignored (and stored as ``None``) for the Gaussian family. The
    Student-t density needs ``nu > 2``; the estimation prior further restricts
    it to ``nu > 4``.
    """

    kind: Family
    nu: float | None = None

    def __post_init__(self):
        kind = Family.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Family.GAUSSIAN:
            object.__setattr__(self, "nu", None)
            return
        if self.nu is None:
            raise DomainError(f"{kind.value} errors need a tail parameter nu")
        nu = float(self.nu)
        if kind is Family.GED and not nu > 0.0:
            raise DomainError(f"GED shape must be positive, got {nu}")
        if kind is Family.STUDENT_T and not nu > 2.0:
            raise DomainError(f"unit-variance Student-t needs nu > 2, got {nu}")
        object.__setattr__(self, "nu", nu)

    @classmethod
    def gaussian(cls) -> "ErrorFamily":
        return cls(Family.GAUSSIAN)

    @classmethod
    def ged(cls, nu: float) -> "ErrorFamily":
        return cls(Family.GED, nu)

    @classmethod
    def student_t(cls, nu: float) -> "ErrorFamily":
        return cls(Family.STUDENT_T, nu)

    def logpdf(self, eps):
        if self.kind is Family.GAUSSIAN:
            return normal_logpdf(eps)
        if self.kind is Family.GED:
            return ged_logpdf(eps, self.nu)
        return student_logpdf(eps, self.nu)

    def sample(self, rng: np.random.Generator, size=None):
        return sample_error(self, rng, size)


def ged_lambda(nu: float) -> float:
    """GED scale ``lam`` making the density unit-variance for shape ``nu``."""
    nu = float(nu)
    if not nu > 0.0:
        raise DomainError(f"GED shape must be positive, got {nu}")
    log_lam2 = -2.0 / nu * _LOG2 + log_gamma(1.0 / nu) - log_gamma(3.0 / nu)
    return math.exp(0.5 * log_lam2)


def ged_kurtosis(nu: float) -> float:
    """Excess kurtosis of the GED, ``Γ(1/ν)Γ(5/ν)/Γ(3/ν)² - 3``."""
    nu = float(nu)
    return math.exp(log_gamma(1.0 / nu) + log_gamma(5.0 / nu) - 2.0 * log_gamma(3.0 / nu)) - 3.0


def normal_logpdf(eps):
    eps = np.asarray(eps, dtype=float)
    return -_HALF_LOG_2PI - 0.5 * eps * eps


def ged_logpdf(eps, nu: float):
    """Log-density of the unit-variance GED with shape ``nu``."""
    nu = float(nu)
    lam = ged_lambda(nu)
    log_norm = math.log(nu) - math.log(lam) - (1.0 + 1.0 / nu) * _LOG2 - log_gamma(1.0 / nu)
    eps = np.asarray(eps, dtype=float)
    return log_norm - 0.5 * np.abs(eps / lam) ** nu


def student_logpdf(eps, nu: float):
    """Log-density of the Student-t with ``nu`` dof, rescaled to unit variance."""
    nu = float(nu)
    if not nu > 2.0:
        raise DomainError(f"unit-variance Student-t needs nu > 2, got {nu}")
    log_norm = (
        log_gamma(0.5 * (nu + 1.0))
        - log_gamma(0.5 * nu)
        - 0.5 * math.log(math.pi * (nu - 2.0))
    )
    eps = np.asarray(eps, dtype=float)
    return log_norm - 0.5 * (nu + 1.0) * np.log1p(eps * eps / (nu - 2.0))


def sample_error(family: ErrorFamily, rng: np.random.Generator, size=None):
    """Draw zero-mean, unit-variance errors from ``family``.

    GED draws use the gamma representation: ``0.5 * |e/lam|**nu`` is
    Gamma(1/nu, 1), so ``|e| = lam * (2 G)**(1/nu)`` with an independent sign.
    Student-t draws scale a standard t variate by ``sqrt((nu-2)/nu)``.
    """
    if family.kind is Family.GAUSSIAN:
        return rng.standard_normal(size)
    nu = family.nu
    if family.kind is Family.GED:
        lam = ged_lambda(nu)
        g = rng.gamma(1.0 / nu, 1.0, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * lam * (2.0 * g) ** (1.0 / nu)
    return rng.standard_t(nu, size) * math.sqrt((nu - 2.0) / nu)
