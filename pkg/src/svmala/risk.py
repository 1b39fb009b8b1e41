"""One-step-ahead predictive Value-at-Risk and rolling-window backtests.

For each kept posterior draw ``j`` the latent state is propagated once,
``h_{n+1} = phi h_n + sigma eta``, then ``L`` errors give returns
``beta exp(h_{n+1}/2) eps``. The per-draw VaR is the negated type-7 sample
quantile at ``1 - level`` and the forecast averages these over draws.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .distributions import Family, ged_lambda
from .exceptions import DataError
from .model import ModelParams
from .samplers import McmcConfig, default_init, run_chain

__all__ = ["VarForecast", "VarBacktest", "var_one_step", "rolling_backtest", "draw_errors"]

log = logging.getLogger(__name__)

_CHUNK_CELLS = 1 << 20


@dataclass(frozen=True)
class VarForecast:
    level: float
    var_point: float
    per_draw: np.ndarray
    n_inner: int

    @property
    def n_draws(self) -> int:
        return self.per_draw.size

    @property
    def std_error(self) -> float:
        """Monte Carlo standard error of ``var_point`` across draws."""
        if self.per_draw.size < 2:
            return math.nan
        return float(self.per_draw.std(ddof=1) / math.sqrt(self.per_draw.size))


def draw_errors(kind, nu, rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Unit-variance errors, shape ``(rows, cols)``, with one tail parameter per row."""
    kind = Family.parse(kind)
    if kind is Family.GAUSSIAN:
        return rng.standard_normal((rows, cols))
    nu = np.broadcast_to(np.asarray(nu, dtype=float), (rows,))[:, None]
    if kind is Family.GED:
        lam = np.array([ged_lambda(v) for v in nu[:, 0]])[:, None]
        g = rng.gamma(1.0 / nu, 1.0, (rows, cols))
        sign = np.where(rng.random((rows, cols)) < 0.5, -1.0, 1.0)
        return sign * lam * (2.0 * g) ** (1.0 / nu)
    return rng.standard_t(nu, (rows, cols)) * np.sqrt((nu - 2.0) / nu)


def var_one_step(chain, level: float = 0.99, n_inner: int = 1000,
                 rng: np.random.Generator | None = None, kind=None) -> VarForecast:
    """Posterior predictive one-step VaR from a chain's ``theta`` and ``h_n`` draws.

    ``chain`` needs ``theta_draws`` (columns beta, phi, sigma, nu) and
    ``h_last``; ``kind`` defaults to ``chain.kind``. All ``eta`` draws are
    taken first, then the errors in row chunks that bound memory use.
    """
    if not 0.5 < level < 1.0:
        raise ValueError(f"level must lie in (0.5, 1), got {level}")
    if n_inner < 1:
        raise ValueError("n_inner must be at least 1")
    theta = np.atleast_2d(np.asarray(chain.theta_draws, dtype=float))
    h_n = np.atleast_1d(np.asarray(chain.h_last, dtype=float))
    if theta.shape[0] == 0:
        raise ValueError("chain has no draws")
    if h_n.shape[0] != theta.shape[0]:
        raise ValueError("theta_draws and h_last differ in length")
    kind = Family.parse(chain.kind if kind is None else kind)
    rng = np.random.default_rng() if rng is None else rng

    beta, phi, sigma, nu = theta[:, 0], theta[:, 1], theta[:, 2], theta[:, 3]
    h_next = phi * h_n + sigma * rng.standard_normal(h_n.size)
    scale = beta * np.exp(0.5 * h_next)
    per_draw = np.empty(h_n.size)
    rows = max(1, _CHUNK_CELLS // n_inner)
    for start in range(0, h_n.size, rows):
        stop = min(start + rows, h_n.size)
        eps = draw_errors(kind, nu[start:stop], rng, stop - start, n_inner)
        returns = scale[start:stop, None] * eps
        per_draw[start:stop] = -np.quantile(returns, 1.0 - level, axis=1, method="linear")
    return VarForecast(level, float(per_draw.mean()), per_draw, n_inner)


@dataclass(frozen=True)
class VarBacktest:
    """Window results; ``exceeded`` marks returns strictly below ``-var``.

    Windows whose fit failed carry ``var = nan`` and ``failed = True`` and do
    not count as exceedances.
    """

    index: np.ndarray
    returns: np.ndarray
    var: np.ndarray
    exceeded: np.ndarray
    failed: np.ndarray
    level: float
    exceedance_count: int

    @property
    def n_windows(self) -> int:
        return self.index.size

    @property
    def expected_exceedances(self) -> float:
        return (1.0 - self.level) * int((~self.failed).sum())

    def recount(self) -> int:
        ok = ~self.failed
        return int(np.sum(self.returns[ok] < -self.var[ok]))


def _warm_h(chain, n: int) -> np.ndarray:
    """Previous final ``h`` extended to length ``n`` by its AR(1) mean path."""
    h = list(chain.final_h[:n])
    phi = float(np.mean(chain.theta_draws[:, 1]))
    while len(h) < n:
        h.append(phi * h[-1])
    return np.array(h)


def rolling_backtest(y, window: int = 252, kind="gaussian", cfg: McmcConfig | None = None,
                     level: float = 0.99, n_inner: int = 1000, seed: int = 0,
                     warm_start: bool = True, warm_cfg: McmcConfig | None = None) -> VarBacktest:
    """Refit on ``y[:n-window+i]`` and forecast ``y[n-window+i]`` for ``i < window``.

    With ``warm_start`` every window after the first starts from the previous
    posterior means, the previous final ``h`` extended by one step, and the
    tuned step sizes, and runs ``warm_cfg`` (default: a quarter of ``cfg``).
    Window ``i`` uses the ``i``-th child of ``SeedSequence(seed)``.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if not 0 < window < n - 1:
        raise DataError(f"need 0 < window < n - 1 (n={n}, window={window})")
    kind = Family.parse(kind)
    cfg = McmcConfig() if cfg is None else cfg
    if warm_cfg is None:
        warm_cfg = replace(cfg, n_iter=max(cfg.n_iter // 4, 2), burn_in=max(cfg.burn_in // 4, 1))

    index = np.arange(n - window, n)
    var = np.full(window, math.nan)
    failed = np.zeros(window, dtype=bool)
    prev = None
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(window)):
        fit_ss, var_ss = child.spawn(2)
        train = y[: n - window + i]
        try:
            if warm_start and prev is not None:
                beta, phi, sigma, nu = (float(v) for v in prev.theta_draws.mean(axis=0))
                init = ModelParams.build(beta, phi, sigma, kind, nu if kind.has_tail else None)
                run_cfg = replace(warm_cfg, eps_vol=prev.eps_vol, eps_par=prev.eps_par)
                chain = run_chain(train, _warm_h(prev, train.size), init, run_cfg, np.random.default_rng(fit_ss))
            else:
                h0, init = default_init(train, kind)
                chain = run_chain(train, h0, init, cfg, np.random.default_rng(fit_ss))
            var[i] = var_one_step(chain, level, n_inner, np.random.default_rng(var_ss)).var_point
            prev = chain
        except (ArithmeticError, ValueError) as exc:
            log.warning("window %d failed: %s", i, exc)
            failed[i] = True
    returns = y[index]
    exceeded = np.zeros(window, dtype=bool)
    exceeded[~failed] = returns[~failed] < -var[~failed]
    return VarBacktest(index, returns, var, exceeded, failed, level, int(exceeded.sum()))
