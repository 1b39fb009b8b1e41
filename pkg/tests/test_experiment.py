import math

import numpy as np
import pytest

from svmala.experiment import McExperiment, chain_estimator, replication_streams, run_mc
from svmala.model import ModelParams, simulate
from svmala.samplers import McmcConfig

TRUTH = ModelParams.build(0.65, 0.98, 0.15, "gaussian")
TRUTH_T = ModelParams.build(0.65, 0.98, 0.15, "t", 7.0)


def truth_estimator(y, h, truth, cfg, rng):
    return dict(zip(("beta", "phi", "sigma", "nu"), truth.as_tuple()))


def noisy_estimator(y, h, truth, cfg, rng):
    est = truth_estimator(y, h, truth, cfg, rng)
    return {k: v + 0.1 * rng.standard_normal() + 0.01 * float(y[0]) for k, v in est.items()}


def flaky_estimator(y, h, truth, cfg, rng):
    if y[0] > 0:
        raise FloatingPointError("synthetic failure")
    return noisy_estimator(y, h, truth, cfg, rng)


def test_truth_stub_gives_zero_error():
    res = run_mc(McExperiment(TRUTH_T, n_obs=20, m_reps=5), seed=1, estimator=truth_estimator)
    for name in ("beta", "phi", "sigma", "nu"):
        assert res.bias[name] == 0.0 and res.smse[name] == 0.0
    assert res.n_failed == 0 and res.estimates.shape == (5, 4)


def test_gaussian_has_no_nu_row():
    res = run_mc(McExperiment(TRUTH, n_obs=20, m_reps=3), seed=1, estimator=truth_estimator)
    assert res.param_names == ("beta", "phi", "sigma")
    assert [r["param"] for r in res.rows()] == ["beta", "phi", "sigma"]


def test_smse_bounds_bias():
    res = run_mc(McExperiment(TRUTH, n_obs=20, m_reps=30), seed=2, estimator=noisy_estimator)
    for name in res.param_names:
        assert res.smse[name] ** 2 >= res.bias[name] ** 2 - 1e-15
        err = res.estimates[:, ("beta", "phi", "sigma").index(name)] - res.truth[name]
        assert res.smse[name] == pytest.approx(math.sqrt(np.mean(err**2)), rel=1e-12)


def test_reproducible_and_worker_independent():
    exp = McExperiment(TRUTH, n_obs=20, m_reps=6)
    a = run_mc(exp, seed=3, estimator=noisy_estimator)
    b = run_mc(exp, seed=3, estimator=noisy_estimator)
    c = run_mc(exp, seed=3, estimator=noisy_estimator, workers=2)
    assert a.bias == b.bias == c.bias and a.smse == b.smse == c.smse
    assert run_mc(exp, seed=4, estimator=noisy_estimator).bias != a.bias


def test_datasets_shared_across_schemes():
    streams = replication_streams(5, 3)
    again = replication_streams(5, 3)
    for (d1, _), (d2, _) in zip(streams, again):
        y1, _ = simulate(TRUTH, 10, np.random.default_rng(d1))
        y2, _ = simulate(TRUTH, 10, np.random.default_rng(d2))
        assert np.array_equal(y1, y2)
    hyb = McExperiment(TRUTH, 20, 4, scheme="hybrid")
    mal = McExperiment(TRUTH, 20, 4, scheme="mala")
    assert hyb.scheme == "hybrid" and mal.cfg.scheme == "mala"
    seen = {}

    def record(tag):
        def est(y, h, truth, cfg, rng):
            seen.setdefault(tag, []).append(y.copy())
            return truth_estimator(y, h, truth, cfg, rng)
        return est

    run_mc(hyb, seed=9, estimator=record("h"))
    run_mc(mal, seed=9, estimator=record("m"))
    assert all(np.array_equal(a, b) for a, b in zip(seen["h"], seen["m"]))


def test_failures_are_excluded_and_counted():
    res = run_mc(McExperiment(TRUTH, n_obs=20, m_reps=20), seed=6, estimator=flaky_estimator)
    assert 0 < res.n_failed < 20 and res.n_ok + res.n_failed == 20
    assert res.estimates.shape[0] == res.n_ok
    assert all("FloatingPointError" in r.error for r in res.replications if not r.ok)
    assert all(math.isfinite(v) for v in res.bias.values())


def test_all_failed_gives_nan():
    def bad(*args):
        raise ValueError("no")

    res = run_mc(McExperiment(TRUTH, n_obs=20, m_reps=2), estimator=bad)
    assert res.n_ok == 0 and math.isnan(res.bias["phi"])


def test_chain_estimator_runs():
    cfg = McmcConfig(n_iter=200, burn_in=100, h_sketch_size=0)
    res = run_mc(McExperiment(TRUTH, n_obs=50, m_reps=2, cfg=cfg), seed=0)
    assert res.n_ok == 2
    va, vp = res.mean_acceptance()
    assert 0 < va <= 1 and 0 < vp <= 1


def test_bad_experiment():
    with pytest.raises(ValueError):
        McExperiment(TRUTH, m_reps=0)
    with pytest.raises(ValueError):
        McExperiment(TRUTH, n_obs=1)
