"""Data ingestion, descriptive statistics and file writers.

Every float is written with ``%.17g`` so that reading a file back gives the
in-memory values bit for bit, and no writer emits timestamps or other
run-dependent content.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.stats import gaussian_kde

from .diagnostics import acf, summarize_chain
from .exceptions import DataError
from .model import ReturnSeries
from .samplers import PARAM_NAMES, ChainOutput

__all__ = [
    "DescriptiveStats",
    "load_series",
    "prices_to_returns",
    "describe",
    "fmt",
    "write_series_csv",
    "write_chain_csv",
    "read_chain_csv",
    "write_summary_json",
    "write_var_csv",
    "write_mc_csv",
    "write_plot_data",
]

CHAIN_HEADER = ("iter", "beta", "phi", "sigma", "nu", "accept_vol", "accept_par")


def fmt(x) -> str:
    return "%.17g" % float(x)


def _parse_float(cell: str):
    try:
        return float(cell)
    except ValueError:
        return None


def prices_to_returns(prices) -> np.ndarray:
    """Percent log-returns ``100 * (ln P_t - ln P_{t-1})``."""
    p = np.asarray(prices, dtype=float)
    if np.any(p <= 0.0):
        raise DataError("prices must be positive")
    return 100.0 * np.diff(np.log(p))


def load_series(path, kind: str = "returns", demean: bool = False) -> ReturnSeries:
    """Read a one- or two-column CSV (``value`` or ``date,value``) into returns.

    ``kind="prices"`` converts to percent log-returns ``100 * diff(ln P)``.
    A header row is detected when its value cell is not numeric; a headed
    file with a ``y`` column and more than two columns (the simulator's
    ``t,y,h`` output) is read from that column. Errors name the 1-based row.
    """
    if kind not in ("returns", "prices"):
        raise ValueError(f"kind must be 'returns' or 'prices', got {kind!r}")
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [(i, r) for i, r in enumerate(csv.reader(text.splitlines()), start=1) if any(c.strip() for c in r)]
    col, width = -1, None
    if rows and _parse_float(rows[0][1][-1].strip()) is None:
        header = [c.strip().lower() for c in rows[0][1]]
        rows = rows[1:]
        if "y" in header and len(header) > 2:
            # simulator output (t,y,h): read the y column
            col, width = header.index("y"), len(header)
    values, dates = [], []
    for lineno, row in rows:
        if width is not None:
            if len(row) != width:
                raise DataError(f"row {lineno}: expected {width} columns, got {len(row)}")
        elif len(row) not in (1, 2):
            raise DataError(f"row {lineno}: expected 1 or 2 columns, got {len(row)}")
        value = _parse_float(row[col].strip())
        if value is None:
            raise DataError(f"row {lineno}: non-numeric value {row[col].strip()!r}")
        if not math.isfinite(value):
            raise DataError(f"row {lineno}: value is not finite")
        if kind == "prices" and value <= 0.0:
            raise DataError(f"row {lineno}: price must be positive")
        values.append(value)
        dates.append(row[0].strip() if width is None and len(row) == 2 else None)
    need = 3 if kind == "prices" else 2
    if len(values) < need:
        raise DataError(f"{path}: need at least {need} data rows, found {len(values)}")
    x = np.array(values)
    if kind == "prices":
        x = prices_to_returns(x)
        dates = dates[1:]
    if demean:
        x = x - x.mean()
    has_dates = all(d is not None for d in dates)
    return ReturnSeries(x, tuple(dates) if has_dates else None)


@dataclass(frozen=True)
class DescriptiveStats:
    """Moment statistics; ``kurtosis`` is raw (3 for a normal law)."""

    n: int
    mean: float
    sd: float
    skewness: float
    kurtosis: float

    def to_dict(self) -> dict:
        return asdict(self)


def describe(y) -> DescriptiveStats:
    """Mean, sample sd (divisor n-1), moment skewness and raw kurtosis.

    A constant series has undefined skewness and kurtosis, reported as nan.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise DataError("describe needs at least two observations")
    mean = float(y.mean())
    d = y - mean
    m2 = float(np.mean(d * d))
    sd = float(y.std(ddof=1))
    if m2 <= 0.0:
        return DescriptiveStats(y.size, mean, sd, math.nan, math.nan)
    skew = float(np.mean(d**3)) / m2**1.5
    kurt = float(np.mean(d**4)) / (m2 * m2)
    return DescriptiveStats(y.size, mean, sd, skew, kurt)


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_series_csv(path, y, h=None):
    """Simulated data: ``t,y`` or ``t,y,h``."""
    y = np.asarray(y, dtype=float)
    if h is None:
        return _write_rows(path, ("t", "y"), ((t, fmt(v)) for t, v in enumerate(y, 1)))
    return _write_rows(path, ("t", "y", "h"), ((t, fmt(a), fmt(b)) for t, (a, b) in enumerate(zip(y, h), 1)))


def write_chain_csv(path, chain: ChainOutput):
    rows = (
        (int(it), *(fmt(v) for v in theta), int(av), int(ap))
        for it, theta, av, ap in zip(chain.iterations, chain.theta_draws, chain.accept_vol_flags, chain.accept_par_flags)
    )
    return _write_rows(path, CHAIN_HEADER, rows)


def read_chain_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CHAIN_HEADER:
            raise DataError(f"{path}: unexpected chain header {header}")
        cols = list(zip(*reader)) or [()] * len(CHAIN_HEADER)
    out = {name: np.array([float(v) for v in col]) for name, col in zip(CHAIN_HEADER, cols)}
    out["iter"] = out["iter"].astype(int)
    return out


def _clean(obj):
    """JSON-safe copy: non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_summary_json(path, chain: ChainOutput, config: dict, seed: int):
    summaries = summarize_chain(chain)
    doc = {
        "params": {name: s.to_dict() for name, s in summaries.items()},
        "acceptance": {"vol": chain.accept_rate_vol, "par": chain.accept_rate_par},
        "config": config,
        "seed": seed,
        "diagnostics": {"jitter_count": chain.jitter_count, "nonfinite_count": chain.nonfinite_count,
                        "eps_vol": chain.eps_vol, "eps_par": chain.eps_par},
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


def write_var_csv(path, backtest):
    rows = (
        (int(i), fmt(r), fmt(v), int(e))
        for i, r, v, e in zip(backtest.index, backtest.returns, backtest.var, backtest.exceeded)
    )
    return _write_rows(path, ("index", "return", "var", "exceeded"), rows)


def write_mc_csv(path, results):
    """Bias/smse table, one row per (scheme, parameter)."""
    header = ("scheme", "family", "param", "true", "bias", "smse", "m_ok", "m_failed")
    rows = []
    for res in results:
        for r in res.rows():
            rows.append((r["scheme"], r["family"], r["param"], fmt(r["true"]), fmt(r["bias"]), fmt(r["smse"]),
                         r["m_ok"], r["m_failed"]))
    return _write_rows(path, header, rows)


def write_plot_data(outdir, chain: ChainOutput, y=None, max_lag: int = 100, trace_points: int = 2000,
                    grid_points: int = 200) -> list[Path]:
    """Plot-ready CSVs: ``acf.csv``, ``trace.csv``, ``density.csv`` and ``volatility.csv``.

    The volatility file holds per-time posterior median, 5% and 95% of ``h``
    (from the stored sketch) and ``exp(h_med/2)`` scaled by the posterior mean
    of ``beta``.
    """
    outdir = Path(outdir)
    names = PARAM_NAMES if chain.kind.has_tail else PARAM_NAMES[:3]
    draws = chain.theta_draws[:, : len(names)]
    k = draws.shape[0]
    written = []

    lags = min(max_lag, k - 1)
    cols = [acf(draws[:, j], lags) for j in range(len(names))]
    written.append(_write_rows(outdir / "acf.csv", ("lag", *names),
                               ((lag, *(fmt(c[lag]) for c in cols)) for lag in range(lags + 1))))

    step = max(1, math.ceil(k / trace_points))
    written.append(_write_rows(outdir / "trace.csv", ("iter", *names),
                               ((int(chain.iterations[i]), *(fmt(v) for v in draws[i])) for i in range(0, k, step))))

    rows = []
    for j, name in enumerate(names):
        x = draws[:, j]
        lo, hi = float(x.min()), float(x.max())
        grid = np.linspace(lo, hi, grid_points)
        if hi > lo:
            dens = gaussian_kde(x)(grid)
        else:
            dens = np.full(grid_points, math.nan)
        rows.extend((name, fmt(g), fmt(d)) for g, d in zip(grid, dens))
    written.append(_write_rows(outdir / "density.csv", ("param", "x", "density"), rows))

    if chain.h_sketch is not None or chain.h_draws is not None:
        q05, q50, q95 = chain.h_quantile([0.05, 0.5, 0.95])
        beta = float(draws[:, 0].mean())
        y = np.full(q50.size, math.nan) if y is None else np.asarray(y, dtype=float)
        rows = (
            (t + 1, fmt(y[t]), fmt(q05[t]), fmt(q50[t]), fmt(q95[t]), fmt(math.exp(0.5 * q50[t])),
             fmt(beta * math.exp(0.5 * q50[t])))
            for t in range(q50.size)
        )
        written.append(_write_rows(outdir / "volatility.csv",
                                   ("t", "y", "h_q05", "h_median", "h_q95", "exp_half_h", "volatility"), rows))
    return written
