"""MALA and simplified manifold-MALA kernels and the two-block SV sampler.

The generic kernels act on a :class:`Target` exposing ``value_and_grad`` and,
for the manifold kernel, a ``metric`` returning either a :class:`SymTridiag`
or a small dense SPD matrix. The SV sampler alternates a MALA update of the
latent path ``h`` with an update of ``xi = (delta, gamma, alpha[, p])`` by
simplified MMALA (the hybrid scheme) or plain MALA.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from .distributions import Family
from .exceptions import NumericalError
from .geometry import HBlock, metric_theta, theta_value_and_grad
from .linalg import NotPositiveDefinite, factor_with_jitter
from .model import ModelParams, STUDENT_NU_FLOOR, theta_to_xi, xi_to_theta

__all__ = [
    "Target",
    "Point",
    "StepResult",
    "McmcConfig",
    "ChainOutput",
    "evaluate",
    "mala_step",
    "mmala_simplified_step",
    "adapt_step_size",
    "StepSizeAdapter",
    "SweepState",
    "hybrid_sweep",
    "run_chain",
    "prior_medians",
    "default_init",
]

log = logging.getLogger(__name__)

OPTIMAL_MALA_ACCEPT = 0.574


@dataclass
class Target:
    """Log-density with gradient, optionally with a Riemannian metric."""

    value_and_grad: Callable
    metric: Callable | None = None

    @classmethod
    def from_functions(cls, log_density, gradient, metric=None) -> "Target":
        return cls(lambda x: (log_density(x), gradient(x)), metric)


@dataclass
class Point:
    x: np.ndarray
    logp: float
    grad: np.ndarray | None
    factor: object | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.logp) and self.grad is not None and math.isfinite(float(self.grad.sum()))


class StepResult(NamedTuple):
    point: Point
    accepted: bool
    log_alpha: float
    nonfinite: bool = False
    jittered: bool = False


def evaluate(target: Target, x, with_metric: bool = False) -> Point:
    """Evaluate ``target`` at ``x``; failures give a point with ``logp = -inf``."""
    x = np.asarray(x, dtype=float)
    try:
        with np.errstate(all="ignore"):
            logp, grad = target.value_and_grad(x)
        logp = float(logp)
        grad = np.asarray(grad, dtype=float)
    except (ArithmeticError, ValueError):
        return Point(x, -math.inf, None)
    point = Point(x, logp, grad)
    if with_metric and point.finite:
        try:
            point.factor = factor_with_jitter(target.metric(x))
        except (NotPositiveDefinite, ArithmeticError, ValueError):
            log.debug("metric factorization failed at %s", x[:8])
            point.logp = -math.inf
    return point


def _accept(log_alpha: float, u: float) -> bool:
    return math.isfinite(log_alpha) and math.log(u) < log_alpha


def mala_step(target: Target, current: Point, eps: float, rng: np.random.Generator) -> StepResult:
    """One Metropolis-adjusted Langevin step with isotropic proposal ``eps^2 I``."""
    z = rng.standard_normal(current.x.size)
    u = rng.random()
    if eps <= 0.0:
        return StepResult(current, True, 0.0)
    half = 0.5 * eps * eps
    mean_fwd = current.x + half * current.grad
    proposal = evaluate(target, mean_fwd + eps * z)
    if not proposal.finite:
        return StepResult(current, False, -math.inf, nonfinite=True)
    mean_bwd = proposal.x + half * proposal.grad
    d_fwd = proposal.x - mean_fwd
    d_bwd = current.x - mean_bwd
    log_q_fwd = -(d_fwd @ d_fwd) / (2.0 * eps * eps)
    log_q_bwd = -(d_bwd @ d_bwd) / (2.0 * eps * eps)
    log_alpha = proposal.logp - current.logp + log_q_bwd - log_q_fwd
    if _accept(log_alpha, u):
        return StepResult(proposal, True, log_alpha)
    return StepResult(current, False, log_alpha)


def mmala_simplified_step(target: Target, current: Point, eps: float, rng: np.random.Generator) -> StepResult:
    """Manifold MALA step with the constant-curvature mean.

    Proposal ``N(x + eps^2/2 G(x)^-1 grad, eps^2 G(x)^-1)``. The reverse
    density uses the metric at the proposed point, so both log-determinants
    enter the acceptance ratio.
    """
    z = rng.standard_normal(current.x.size)
    u = rng.random()
    if eps <= 0.0:
        return StepResult(current, True, 0.0)
    if current.factor is None:
        current.factor = factor_with_jitter(target.metric(current.x))
    half = 0.5 * eps * eps
    f_cur = current.factor
    mean_fwd = current.x + half * f_cur.solve(current.grad)
    proposal = evaluate(target, mean_fwd + eps * f_cur.sample_precision(z), with_metric=True)
    if not proposal.finite:
        return StepResult(current, False, -math.inf, nonfinite=True)
    f_prop = proposal.factor
    mean_bwd = proposal.x + half * f_prop.solve(proposal.grad)
    log_q_fwd = 0.5 * f_cur.logdet() - f_cur.quad(proposal.x - mean_fwd) / (2.0 * eps * eps)
    log_q_bwd = 0.5 * f_prop.logdet() - f_prop.quad(current.x - mean_bwd) / (2.0 * eps * eps)
    log_alpha = proposal.logp - current.logp + log_q_bwd - log_q_fwd
    jittered = f_prop.jitter > 0.0
    if _accept(log_alpha, u):
        return StepResult(proposal, True, log_alpha, jittered=jittered)
    return StepResult(current, False, log_alpha, jittered=jittered)


def adapt_step_size(
    eps: float,
    history,
    target_rate: float = OPTIMAL_MALA_ACCEPT,
    phase: str = "burn-in",
    iteration: int = 1,
    kappa: float = 0.6,
    t0: float = 10.0,
) -> float:
    """Robbins-Monro update of ``log eps`` toward ``target_rate``.

    ``history`` holds recent acceptance probabilities (or 0/1 flags). Outside
    the burn-in phase the step size is returned unchanged.
    """
    history = np.atleast_1d(np.asarray(history, dtype=float))
    if history.size == 0:
        raise ValueError("history must not be empty")
    if phase != "burn-in":
        return eps
    gain = (iteration + t0) ** (-kappa)
    return eps * math.exp(gain * (float(history.mean()) - target_rate))


class StepSizeAdapter:
    def __init__(self, eps: float, target_rate: float, kappa: float = 0.6, t0: float = 10.0):
        self.eps = eps
        self.target_rate = target_rate
        self.kappa = kappa
        self.t0 = t0
        self.count = 0
        self.frozen = False

    def update(self, log_alpha: float) -> float:
        if self.frozen:
            return self.eps
        self.count += 1
        prob = math.exp(min(0.0, log_alpha)) if math.isfinite(log_alpha) else 0.0
        self.eps = adapt_step_size(self.eps, prob, self.target_rate, "burn-in", self.count, self.kappa, self.t0)
        return self.eps

    def freeze(self):
        self.frozen = True


@dataclass
class McmcConfig:
    n_iter: int = 20000
    burn_in: int = 10000
    thin: int = 1
    eps_vol: float = 0.05
    eps_par: float | None = None
    seed: int = 0
    adapt: bool = True
    target_accept_vol: float = OPTIMAL_MALA_ACCEPT
    target_accept_par: float = OPTIMAL_MALA_ACCEPT
    scheme: str = "hybrid"
    vol_kernel: str = "mala"
    store_h: bool = False
    h_sketch_size: int = 500

    def __post_init__(self):
        if self.scheme not in ("hybrid", "mala"):
            raise ValueError(f"scheme must be 'hybrid' or 'mala', got {self.scheme!r}")
        if self.vol_kernel not in ("mala", "mmala"):
            raise ValueError(f"vol_kernel must be 'mala' or 'mmala', got {self.vol_kernel!r}")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if self.eps_par is None:
            self.eps_par = 0.7 if self.scheme == "hybrid" else 0.01
        if self.eps_vol < 0 or self.eps_par < 0:
            raise ValueError("step sizes must be non-negative")

    @property
    def n_kept(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin

    def to_dict(self) -> dict:
        return asdict(self)


PARAM_NAMES = ("beta", "phi", "sigma", "nu")


@dataclass
class ChainOutput:
    """Kept draws of a run plus acceptance statistics.

    ``theta_draws`` columns are ``(beta, phi, sigma, nu)`` on the natural
    scale, with ``nu`` set to nan for Gaussian errors. ``h_last`` holds the
    draws of the final latent value, which the VaR forecast needs.
    """

    kind: Family
    theta_draws: np.ndarray
    h_last: np.ndarray
    iterations: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    accept_vol_flags: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    accept_par_flags: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))
    accept_rate_vol: float = math.nan
    accept_rate_par: float = math.nan
    jitter_count: int = 0
    nonfinite_count: int = 0
    eps_vol: float = math.nan
    eps_par: float = math.nan
    h_mean: np.ndarray | None = None
    h_sketch: np.ndarray | None = None
    h_draws: np.ndarray | None = None
    final_h: np.ndarray | None = None
    final_xi: np.ndarray | None = None

    @property
    def n_kept(self) -> int:
        return self.theta_draws.shape[0]

    def posterior_means(self) -> dict[str, float]:
        means = self.theta_draws.mean(axis=0)
        return {name: float(m) for name, m in zip(PARAM_NAMES, means)}

    def h_quantile(self, q) -> np.ndarray:
        """Per-time posterior quantiles of ``h`` from stored draws or the sketch."""
        draws = self.h_draws if self.h_draws is not None else self.h_sketch
        if draws is None:
            raise ValueError("chain stored no h draws")
        return np.quantile(draws, q, axis=0)


@dataclass
class SweepState:
    h: np.ndarray
    xi: np.ndarray


class SweepInfo(NamedTuple):
    vol: StepResult
    par: StepResult


def _h_target(y, xi, kind) -> Target:
    beta, phi, sigma, nu = xi_to_theta(xi, kind)
    block = HBlock(y, beta, phi, sigma, kind, None if math.isnan(nu) else nu)
    return Target(block, block.metric)


def _xi_target(y, h, kind) -> Target:
    n = y.size
    return Target(
        lambda x: theta_value_and_grad(y, h, x, kind),
        lambda x: metric_theta(x, n, kind),
    )


def hybrid_sweep(y, state: SweepState, cfg: McmcConfig, rng: np.random.Generator, kind,
                 eps_vol: float | None = None, eps_par: float | None = None) -> tuple[SweepState, SweepInfo]:
    """One two-block sweep: ``h`` given ``theta``, then ``xi`` given ``h``."""
    kind = Family.parse(kind)
    eps_vol = cfg.eps_vol if eps_vol is None else eps_vol
    eps_par = cfg.eps_par if eps_par is None else eps_par
    y = np.asarray(y, dtype=float)

    h_target = _h_target(y, state.xi, kind)
    use_vol_metric = cfg.vol_kernel == "mmala"
    h_point = evaluate(h_target, state.h, with_metric=use_vol_metric)
    if not h_point.finite:
        raise NumericalError("latent block target is not finite at the current state")
    vol_kernel = mmala_simplified_step if use_vol_metric else mala_step
    vol = vol_kernel(h_target, h_point, eps_vol, rng)
    h_new = vol.point.x

    xi_target = _xi_target(y, h_new, kind)
    use_par_metric = cfg.scheme == "hybrid"
    xi_point = evaluate(xi_target, state.xi, with_metric=use_par_metric)
    if not xi_point.finite:
        raise NumericalError("parameter block target is not finite at the current state")
    par_kernel = mmala_simplified_step if use_par_metric else mala_step
    par = par_kernel(xi_target, xi_point, eps_par, rng)
    if use_par_metric and xi_point.factor is not None and xi_point.factor.jitter > 0.0:
        par = par._replace(jittered=True)
    return SweepState(h_new, par.point.x), SweepInfo(vol, par)


_PRIOR_MEDIANS: dict | None = None


def prior_medians() -> dict:
    """Prior medians of beta, phi, sigma and of nu under each tail family."""
    global _PRIOR_MEDIANS
    if _PRIOR_MEDIANS is None:
        _PRIOR_MEDIANS = {
            "beta": math.log(2.0),
            "phi": 2.0 * float(stats.beta.ppf(0.5, 20.0, 1.5)) - 1.0,
            # sigma^2 ~ scaled Inv-chi^2(10, 0.05): 10 * 0.05 / chi2_10
            "sigma": math.sqrt(0.5 / float(stats.chi2.ppf(0.5, 10.0))),
            # exp(-4/nu) nu^-3 is an inverse-gamma(2, 4) kernel
            Family.GED: 4.0 / float(stats.gamma.ppf(0.5, 2.0)),
            Family.STUDENT_T: STUDENT_NU_FLOOR + 3.0 * math.log(2.0),
        }
    return _PRIOR_MEDIANS


def default_init(y, kind, floor: float = 1e-4) -> tuple[np.ndarray, ModelParams]:
    """Prior-median parameters and ``h_t = ln(y_t^2 / beta^2 + floor)``."""
    kind = Family.parse(kind)
    med = prior_medians()
    nu = med.get(kind) if kind.has_tail else None
    params = ModelParams.build(med["beta"], med["phi"], med["sigma"], kind, nu)
    y = np.asarray(y, dtype=float)
    h0 = np.log(y * y / params.beta**2 + floor)
    return h0, params


def run_chain(y, init_h, init_params: ModelParams, cfg: McmcConfig,
              rng: np.random.Generator | None = None) -> ChainOutput:
    """Run the two-block sampler with burn-in, thinning and step-size tuning.

    Step sizes adapt during burn-in only and stay fixed afterwards. Given the
    same ``cfg`` (and seed, when ``rng`` is omitted) the output is identical.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    y = np.asarray(y, dtype=float)
    kind = init_params.kind
    state = SweepState(np.array(init_h, dtype=float), theta_to_xi(*init_params.as_tuple(), kind))
    if state.h.shape != y.shape:
        raise ValueError("initial h must match the data length")
    for target, x in ((_h_target(y, state.xi, kind), state.h), (_xi_target(y, state.h, kind), state.xi)):
        if not evaluate(target, x).finite:
            raise NumericalError("initial state has a non-finite target")

    n, k_total = y.size, cfg.n_kept
    theta_draws = np.empty((k_total, 4))
    h_last = np.empty(k_total)
    iterations = np.empty(k_total, dtype=int)
    acc_vol_flags = np.zeros(k_total, dtype=bool)
    acc_par_flags = np.zeros(k_total, dtype=bool)
    h_sum = np.zeros(n)
    stride = max(1, math.ceil(k_total / cfg.h_sketch_size)) if cfg.h_sketch_size > 0 else 0
    sketch = [] if stride else None
    h_draws = np.empty((k_total, n)) if cfg.store_h else None

    adapt_vol = StepSizeAdapter(cfg.eps_vol, cfg.target_accept_vol)
    adapt_par = StepSizeAdapter(cfg.eps_par, cfg.target_accept_par)
    acc_vol = acc_par = 0
    jitter = nonfinite = 0
    kept = 0
    for it in range(1, cfg.n_iter + 1):
        sampling = it > cfg.burn_in
        if sampling and not adapt_vol.frozen:
            adapt_vol.freeze()
            adapt_par.freeze()
        state, info = hybrid_sweep(y, state, cfg, rng, kind, adapt_vol.eps, adapt_par.eps)
        jitter += info.par.jittered
        nonfinite += info.vol.nonfinite + info.par.nonfinite
        if cfg.adapt and not sampling:
            adapt_vol.update(info.vol.log_alpha)
            adapt_par.update(info.par.log_alpha)
        if not sampling:
            continue
        acc_vol += info.vol.accepted
        acc_par += info.par.accepted
        if (it - cfg.burn_in) % cfg.thin:
            continue
        theta_draws[kept] = xi_to_theta(state.xi, kind)
        h_last[kept] = state.h[-1]
        iterations[kept] = it
        acc_vol_flags[kept] = info.vol.accepted
        acc_par_flags[kept] = info.par.accepted
        h_sum += state.h
        if h_draws is not None:
            h_draws[kept] = state.h
        if stride and kept % stride == 0:
            sketch.append(state.h.copy())
        kept += 1

    n_sampling = cfg.n_iter - cfg.burn_in
    return ChainOutput(
        kind=kind,
        theta_draws=theta_draws,
        h_last=h_last,
        iterations=iterations,
        accept_vol_flags=acc_vol_flags,
        accept_par_flags=acc_par_flags,
        accept_rate_vol=acc_vol / n_sampling,
        accept_rate_par=acc_par / n_sampling,
        jitter_count=int(jitter),
        nonfinite_count=int(nonfinite),
        eps_vol=adapt_vol.eps,
        eps_par=adapt_par.eps,
        h_mean=h_sum / max(kept, 1),
        h_sketch=np.array(sketch) if sketch else None,
        h_draws=h_draws,
        final_h=state.h.copy(),
        final_xi=state.xi.copy(),
    )
