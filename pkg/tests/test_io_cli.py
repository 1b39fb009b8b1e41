import json
import math

import numpy as np
import pytest

from svmala.cli import main, read_config
from svmala.exceptions import DataError
from svmala.io import (
    describe,
    load_series,
    prices_to_returns,
    read_chain_csv,
    write_chain_csv,
    write_summary_json,
)
from svmala.model import ModelParams, simulate
from svmala.samplers import McmcConfig, run_chain


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_prices_to_returns_example():
    assert prices_to_returns([100.0, 101.0])[0] == pytest.approx(0.995033, abs=1e-6)
    assert np.array_equal(prices_to_returns([5.0, 5.0, 5.0]), [0.0, 0.0])
    with pytest.raises(DataError):
        prices_to_returns([1.0, -1.0])


def test_load_returns_with_header_and_dates(tmp_path):
    s = load_series(write(tmp_path / "r.csv", "date,ret\n2001-01-02,0.5\n2001-01-03,-0.25\n\n2001-01-04,1\n"))
    assert np.array_equal(s.values, [0.5, -0.25, 1.0])
    assert s.dates == ("2001-01-02", "2001-01-03", "2001-01-04")
    s = load_series(write(tmp_path / "one.csv", "1.5\n2.5\n"), demean=True)
    assert np.array_equal(s.values, [-0.5, 0.5]) and s.dates is None


def test_load_prices(tmp_path):
    s = load_series(write(tmp_path / "p.csv", "price\n100\n101\n100\n"), kind="prices")
    assert s.values[0] == pytest.approx(100 * math.log(1.01))
    with pytest.raises(DataError, match="at least 3"):
        load_series(write(tmp_path / "p2.csv", "100\n101\n"), kind="prices")


@pytest.mark.parametrize("text,match", [
    ("x\n1\nabc\n", "row 3"),
    ("1\n2,3,4\n", "row 2"),
    ("1\nnan\n", "row 2"),
    ("1\n", "at least 2"),
])
def test_load_errors_name_rows(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        load_series(write(tmp_path / "bad.csv", text))


def test_load_simulator_output(tmp_path):
    s = load_series(write(tmp_path / "sim.csv", "t,y,h\n1,0.5,-1\n2,0.25,-2\n"))
    assert np.array_equal(s.values, [0.5, 0.25]) and s.dates is None
    with pytest.raises(DataError, match="row 3"):
        load_series(write(tmp_path / "sim2.csv", "t,y,h\n1,0.5,-1\n2,0.25\n"))


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_series(tmp_path / "nope.csv")


def test_describe_small_and_normal():
    d = describe([-1.0, 1.0])
    assert (d.n, d.mean, d.skewness, d.kurtosis) == (2, 0.0, 0.0, 1.0)
    assert d.sd == pytest.approx(math.sqrt(2))
    big = describe(np.random.default_rng(0).standard_normal(200_000))
    assert big.kurtosis == pytest.approx(3.0, abs=0.05) and abs(big.skewness) < 0.02
    flat = describe([2.0, 2.0, 2.0])
    assert flat.sd == 0.0 and math.isnan(flat.kurtosis)


@pytest.fixture(scope="module")
def small_chain():
    p = ModelParams.build(0.65, 0.95, 0.2, "t", 8.0)
    y, h = simulate(p, 60, np.random.default_rng(1))
    return y, run_chain(y, h, p, McmcConfig(n_iter=300, burn_in=100, seed=2))


def test_chain_csv_roundtrip_bitwise(tmp_path, small_chain):
    _, chain = small_chain
    write_chain_csv(tmp_path / "c.csv", chain)
    back = read_chain_csv(tmp_path / "c.csv")
    assert np.array_equal(back["iter"], chain.iterations)
    for j, name in enumerate(("beta", "phi", "sigma", "nu")):
        assert np.array_equal(back[name], chain.theta_draws[:, j])
    assert np.array_equal(back["accept_vol"].astype(bool), chain.accept_vol_flags)


def test_summary_json_schema(tmp_path, small_chain):
    _, chain = small_chain
    write_summary_json(tmp_path / "s.json", chain, {"n_iter": 300}, 2)
    doc = json.loads((tmp_path / "s.json").read_text())
    assert set(doc) == {"params", "acceptance", "config", "seed", "diagnostics"}
    assert set(doc["params"]) == {"beta", "phi", "sigma", "nu"}
    assert set(doc["params"]["phi"]) == {"mean", "sd", "q05", "q50", "q95", "ess"}
    assert 0 <= doc["acceptance"]["vol"] <= 1 and doc["seed"] == 2


def test_read_config(tmp_path):
    cfg = read_config(write(tmp_path / "c.cfg", "# comment\neps-vol = 0.1\nseed=3  # trailing\n\n"))
    assert cfg == {"eps_vol": "0.1", "seed": "3"}


def test_cli_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["simulate", "--n", "50", "--errors", "ged", "--nu", "1.5", "--seed", "4", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "t,y,h"
    assert len(a.read_text().splitlines()) == 51


def test_cli_fit_outputs_and_determinism(tmp_path):
    data = tmp_path / "sim.csv"
    assert main(["simulate", "--n", "40", "--seed", "1", "--out", str(data)]) == 0
    outs = []
    for tag in ("x", "y"):
        out = tmp_path / tag
        args = ["fit", str(data), "--iters", "200", "--burnin", "100", "--seed", "7", "--out", str(out)]
        assert main(args) == 0
        outs.append(out)
    for name in ("chain.csv", "summary.json", "acf.csv", "trace.csv", "density.csv", "volatility.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cli_describe(tmp_path, capsys):
    data = write(tmp_path / "d.csv", "-1\n1\n")
    assert main(["describe", str(data), "--out", str(tmp_path / "d.json")]) == 0
    doc = json.loads((tmp_path / "d.json").read_text())
    assert doc["kurtosis"] == 1.0 and json.loads(capsys.readouterr().out) == doc


def test_cli_exit_codes(tmp_path):
    bad = write(tmp_path / "bad.csv", "1\nfoo\n")
    assert main([]) == 1
    assert main(["simulate", "--errors", "cauchy"]) == 1
    assert main(["simulate", "--phi", "1.5", "--out", str(tmp_path / "s.csv")]) == 1
    assert main(["simulate", "--errors", "t", "--nu", "2", "--out", str(tmp_path / "s.csv")]) == 1
    assert main(["simulate", "--errors", "ged", "--out", str(tmp_path / "s.csv")]) == 1
    assert main(["describe", str(bad)]) == 2
    assert main(["describe", str(tmp_path / "missing.csv")]) == 2
    data = write(tmp_path / "ok.csv", "0.1\n-0.2\n0.3\n")
    assert main(["fit", str(data), "--iters", "20", "--burnin", "30"]) == 1


def test_cli_config_precedence(tmp_path):
    cfg = write(tmp_path / "c.cfg", "n=30\nseed=5\nerrors=t\nnu=6\n")
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert len(a.read_text().splitlines()) == 31
    assert main(["simulate", "--config", str(cfg), "--n", "12", "--out", str(b)]) == 0
    assert len(b.read_text().splitlines()) == 13
    assert main(["simulate", "--n", "30", "--seed", "5", "--errors", "t", "--nu", "6", "--out", str(c)]) == 0
    assert a.read_bytes() == c.read_bytes()
    assert main(["simulate", "--config", str(write(tmp_path / "x.cfg", "colour=red\n"))]) == 1
    assert main(["simulate", "--config", str(write(tmp_path / "y.cfg", "n=many\n"))]) == 1
    assert main(["simulate", "--config", str(tmp_path / "none.cfg")]) == 1
