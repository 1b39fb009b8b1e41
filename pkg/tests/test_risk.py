import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import integrate, optimize, stats

from svmala.distributions import Family, student_logpdf
from svmala.exceptions import DataError
from svmala.model import ModelParams, simulate
from svmala.risk import draw_errors, rolling_backtest, var_one_step
from svmala.samplers import McmcConfig


def point_chain(kind, beta=1.0, nu=math.nan, h=0.0, draws=1):
    """Degenerate posterior with sigma = 0, so every draw has scale beta * exp(h/2)."""
    theta = np.tile([beta, 1.0, 0.0, nu], (draws, 1))
    return SimpleNamespace(kind=Family.parse(kind), theta_draws=theta, h_last=np.full(draws, h))


def test_degenerate_gaussian_quantile():
    f = var_one_step(point_chain("gaussian"), 0.99, 1_000_000, np.random.default_rng(0))
    assert f.var_point == pytest.approx(2.3263, abs=0.01)


def test_scale_equivariance():
    a = var_one_step(point_chain("gaussian", beta=1.0), 0.99, 10_000, np.random.default_rng(1))
    b = var_one_step(point_chain("gaussian", beta=0.65), 0.99, 10_000, np.random.default_rng(1))
    c = var_one_step(point_chain("gaussian", h=math.log(4.0)), 0.99, 10_000, np.random.default_rng(1))
    assert b.var_point == pytest.approx(0.65 * a.var_point, rel=1e-12)
    assert c.var_point == pytest.approx(2.0 * a.var_point, rel=1e-12)


def _t_quantile_by_quadrature(nu, p):
    pdf = lambda x: math.exp(float(student_logpdf(np.array([x]), nu)[0]))
    cdf = lambda q: integrate.quad(pdf, -np.inf, q)[0]
    return optimize.brentq(lambda q: cdf(q) - p, -20, 0, xtol=1e-12)


def test_degenerate_student_quantile():
    oracle = -_t_quantile_by_quadrature(7.0, 0.01)
    assert oracle == pytest.approx(-stats.t.ppf(0.01, 7) * math.sqrt(5 / 7), rel=1e-8)
    f = var_one_step(point_chain("t", nu=7.0), 0.99, 1_000_000, np.random.default_rng(2))
    assert f.var_point == pytest.approx(oracle, abs=0.02)


def test_degenerate_ged_quantile():
    nu = 1.2
    scale = math.sqrt(math.gamma(1 / nu) / math.gamma(3 / nu))
    oracle = -stats.gennorm.ppf(0.01, nu, scale=scale)
    f = var_one_step(point_chain("ged", nu=nu), 0.99, 1_000_000, np.random.default_rng(3))
    assert f.var_point == pytest.approx(oracle, abs=0.02)


@pytest.mark.parametrize("kind,nu", [("gaussian", math.nan), ("ged", 1.5), ("t", 6.0)])
def test_draw_errors_unit_variance(kind, nu):
    e = draw_errors(kind, nu, np.random.default_rng(4), 4, 200_000)
    assert e.shape == (4, 200_000)
    assert np.allclose(e.var(axis=1), 1.0, atol=0.05 if kind == "t" else 0.02)


def test_level_monotone():
    chain = point_chain("gaussian", draws=50)
    vals = [var_one_step(chain, lv, 5000, np.random.default_rng(5)).var_point for lv in (0.9, 0.95, 0.99, 0.995)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_inner_error_shrinks_like_inverse_root():
    chain = point_chain("gaussian", draws=400)
    sizes = np.array([250, 1000, 4000, 16000])
    sds = [var_one_step(chain, 0.99, int(L), np.random.default_rng(6)).per_draw.std() for L in sizes]
    slope = np.polyfit(np.log(sizes), np.log(sds), 1)[0]
    assert abs(slope + 0.5) < 0.1


def test_posterior_chunks_independent_of_size():
    rng = np.random.default_rng(7)
    theta = np.column_stack([rng.uniform(0.5, 1, 3000), rng.uniform(0.9, 0.99, 3000),
                             rng.uniform(0.1, 0.2, 3000), np.full(3000, np.nan)])
    chain = SimpleNamespace(kind=Family.GAUSSIAN, theta_draws=theta, h_last=rng.normal(size=3000))
    f = var_one_step(chain, 0.99, 1000, np.random.default_rng(8))
    assert f.n_draws == 3000 and np.isfinite(f.per_draw).all()
    assert f.var_point == pytest.approx(f.per_draw.mean()) and f.std_error > 0


def test_bad_inputs():
    with pytest.raises(ValueError):
        var_one_step(point_chain("gaussian", draws=0), 0.99, 10)
    with pytest.raises(ValueError):
        var_one_step(point_chain("gaussian"), 1.2, 10)
    with pytest.raises(ValueError):
        var_one_step(point_chain("gaussian"), 0.99, 0)
    with pytest.raises(DataError):
        rolling_backtest(np.zeros(10), window=9)


def test_small_backtest():
    y, _ = simulate(ModelParams.build(0.65, 0.95, 0.2, "gaussian"), 120, np.random.default_rng(9))
    cfg = McmcConfig(n_iter=300, burn_in=150, h_sketch_size=0)
    bt = rolling_backtest(y, window=6, cfg=cfg, n_inner=500, seed=3)
    assert bt.n_windows == 6 and np.array_equal(bt.index, np.arange(114, 120))
    assert np.all(bt.var > 0) and not bt.failed.any()
    assert bt.recount() == bt.exceedance_count == int(bt.exceeded.sum())
    assert bt.expected_exceedances == pytest.approx(0.06)
    again = rolling_backtest(y, window=6, cfg=cfg, n_inner=500, seed=3)
    assert np.array_equal(bt.var, again.var)
    cold = rolling_backtest(y, window=2, cfg=cfg, n_inner=500, seed=3, warm_start=False)
    assert cold.n_windows == 2 and np.all(cold.var > 0)
