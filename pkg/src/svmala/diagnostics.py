"""Chain diagnostics: sample autocorrelation, effective sample size, summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["PosteriorSummary", "acf", "ess", "summarize", "summarize_chain", "QUANTILES"]

QUANTILES = (0.05, 0.5, 0.95)


def acf(series, max_lag: int | None = None) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (biased, FFT-based).

    A constant series returns 1 at lag 0 and zeros elsewhere.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("acf expects a 1-d series")
    n = x.size
    if max_lag is None:
        max_lag = n - 1
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must lie in [0, {n - 1}], got {max_lag}")
    x = x - x.mean()
    out = np.zeros(max_lag + 1)
    c0 = float(x @ x)
    if c0 <= 0.0 or not math.isfinite(c0):
        out[0] = 1.0
        return out
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    cov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    out = cov / cov[0]
    out[0] = 1.0
    return out


def ess(series) -> float:
    """Effective sample size ``N / (1 + 2 sum rho_k)``.

    The sum is truncated by Geyer's initial positive sequence: pairs
    ``rho_{2k} + rho_{2k+1}`` are accumulated while they stay positive.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        return float(n)
    rho = acf(x)
    if np.all(rho[1:] == 0.0) and float(np.ptp(x)) == 0.0:
        return float(n)
    tau = -1.0
    for k in range(0, n - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
    return float(n / tau) if tau > 0.0 else float(n)


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    sd: float
    q05: float
    q50: float
    q95: float
    ess: float
    acf: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd, "q05": self.q05, "q50": self.q50, "q95": self.q95, "ess": self.ess}


def summarize(draws, max_lag: int = 50) -> PosteriorSummary:
    """Mean, sample sd (divisor N-1), 5/50/95% quantiles, ESS and ACF of a 1-d draw vector."""
    x = np.asarray(draws, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("summarize expects a non-empty 1-d array")
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    q = np.quantile(x, QUANTILES)
    lags = min(max_lag, x.size - 1)
    return PosteriorSummary(float(x.mean()), sd, float(q[0]), float(q[1]), float(q[2]), ess(x), acf(x, lags))


def summarize_chain(chain, max_lag: int = 50) -> dict[str, PosteriorSummary]:
    """Summaries keyed by parameter name; ``nu`` is skipped for Gaussian chains."""
    from .samplers import PARAM_NAMES

    names = PARAM_NAMES if chain.kind.has_tail else PARAM_NAMES[:3]
    return {name: summarize(chain.theta_draws[:, j], max_lag) for j, name in enumerate(names)}
