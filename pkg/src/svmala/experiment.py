"""Monte Carlo replication driver: simulate, fit, and aggregate bias and smse.

Each replication ``i`` owns the substream ``SeedSequence(seed).spawn(m)[i]``,
split again into a data stream and a chain stream. Datasets therefore depend
only on the master seed and the replication index, so two schemes run with
the same seed see identical data, and serial or parallel execution gives the
same aggregates.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .model import ModelParams, simulate
from .samplers import PARAM_NAMES, McmcConfig, run_chain

__all__ = ["McExperiment", "McResult", "Replication", "run_mc", "chain_estimator", "replication_streams"]

log = logging.getLogger(__name__)

# estimator(y, h_true, truth, cfg, rng) -> dict with the posterior means keyed by
# parameter name and, optionally, "accept_vol" / "accept_par"
Estimator = Callable[[np.ndarray, np.ndarray, ModelParams, McmcConfig, np.random.Generator], dict]


@dataclass(frozen=True)
class McExperiment:
    true_params: ModelParams
    n_obs: int = 1000
    m_reps: int = 50
    cfg: McmcConfig = field(default_factory=McmcConfig)
    scheme: str | None = None

    def __post_init__(self):
        if self.m_reps < 1:
            raise ValueError("m_reps must be at least 1")
        if self.n_obs < 2:
            raise ValueError("n_obs must be at least 2")
        if self.scheme is not None and self.scheme != self.cfg.scheme:
            object.__setattr__(self, "cfg", replace(self.cfg, scheme=self.scheme, eps_par=None))
        object.__setattr__(self, "scheme", self.cfg.scheme)


@dataclass(frozen=True)
class Replication:
    index: int
    estimate: np.ndarray
    accept_vol: float = math.nan
    accept_par: float = math.nan
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class McResult:
    """Aggregates over the successful replications.

    ``bias = mean(est) - truth`` and ``smse = sqrt(mean((est - truth)^2))``
    per parameter; failed replications are excluded and counted.
    """

    experiment: McExperiment
    truth: dict[str, float]
    replications: tuple[Replication, ...]
    bias: dict[str, float]
    smse: dict[str, float]

    @property
    def n_failed(self) -> int:
        return sum(not r.ok for r in self.replications)

    @property
    def n_ok(self) -> int:
        return len(self.replications) - self.n_failed

    @property
    def estimates(self) -> np.ndarray:
        """Posterior means of the successful replications, one row each."""
        rows = [r.estimate for r in self.replications if r.ok]
        return np.array(rows) if rows else np.empty((0, len(PARAM_NAMES)))

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(self.bias)

    def mean_acceptance(self) -> tuple[float, float]:
        ok = [r for r in self.replications if r.ok]
        if not ok:
            return math.nan, math.nan
        return float(np.mean([r.accept_vol for r in ok])), float(np.mean([r.accept_par for r in ok]))

    def rows(self) -> list[dict]:
        """Table rows in the bias/smse layout, one per parameter."""
        return [
            {"scheme": self.experiment.scheme, "family": self.experiment.true_params.kind.value,
             "param": name, "true": self.truth[name], "bias": self.bias[name], "smse": self.smse[name],
             "m_ok": self.n_ok, "m_failed": self.n_failed}
            for name in self.param_names
        ]


def replication_streams(seed: int, m: int) -> list[tuple[np.random.SeedSequence, np.random.SeedSequence]]:
    """``(data, chain)`` seed sequences for each replication."""
    return [tuple(child.spawn(2)) for child in np.random.SeedSequence(seed).spawn(m)]


def chain_estimator(y, h_true, truth: ModelParams, cfg: McmcConfig, rng) -> dict:
    """Posterior means from one chain started at the true values."""
    out = run_chain(y, h_true, truth, cfg, rng)
    est = out.posterior_means()
    est["accept_vol"] = out.accept_rate_vol
    est["accept_par"] = out.accept_rate_par
    return est


def _one_replication(args) -> Replication:
    index, exp, data_ss, chain_ss, estimator = args
    y, h = simulate(exp.true_params, exp.n_obs, np.random.default_rng(data_ss))
    try:
        est = estimator(y, h, exp.true_params, exp.cfg, np.random.default_rng(chain_ss))
        vec = np.array([float(est.get(name, math.nan)) for name in PARAM_NAMES])
        names = PARAM_NAMES if exp.true_params.kind.has_tail else PARAM_NAMES[:3]
        if not np.all(np.isfinite(vec[: len(names)])):
            raise ArithmeticError("non-finite posterior mean")
    except (ArithmeticError, ValueError) as exc:
        log.warning("replication %d failed: %s", index, exc)
        return Replication(index, np.full(len(PARAM_NAMES), math.nan), error=f"{type(exc).__name__}: {exc}")
    return Replication(index, vec, float(est.get("accept_vol", math.nan)), float(est.get("accept_par", math.nan)))


def run_mc(exp: McExperiment, seed: int = 0, estimator: Estimator | None = None, workers: int = 1) -> McResult:
    """Replicate simulate -> fit -> posterior mean ``m_reps`` times.

    ``workers > 1`` spreads replications over processes; results are
    gathered in replication order, so aggregates do not depend on it.
    """
    estimator = chain_estimator if estimator is None else estimator
    tasks = [(i, exp, d, c, estimator) for i, (d, c) in enumerate(replication_streams(seed, exp.m_reps))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reps = tuple(pool.map(_one_replication, tasks))
    else:
        reps = tuple(_one_replication(t) for t in tasks)

    beta, phi, sigma, nu = exp.true_params.as_tuple()
    truth = {"beta": beta, "phi": phi, "sigma": sigma}
    if exp.true_params.kind.has_tail:
        truth["nu"] = nu
    good = [r.estimate for r in reps if r.ok]
    bias, smse = {}, {}
    for j, name in enumerate(truth):
        if good:
            err = np.array([g[j] for g in good]) - truth[name]
            bias[name] = float(err.mean())
            smse[name] = math.sqrt(float(np.mean(err * err)))
        else:
            bias[name] = smse[name] = math.nan
    return McResult(exp, truth, reps, bias, smse)
