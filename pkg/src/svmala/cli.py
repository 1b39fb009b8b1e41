"""Command-line interface: ``svmala {simulate,fit,mc,var-backtest,describe}``.

Settings come from flags or from a flat ``key=value`` file passed with
``--config``; keys are the long flag names without dashes (``eps-vol`` or
``eps_vol``), and flags given on the command line win.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .distributions import Family
from .exceptions import DataError, DomainError
from .experiment import McExperiment, run_mc
from .io import (
    describe,
    load_series,
    write_chain_csv,
    write_mc_csv,
    write_plot_data,
    write_series_csv,
    write_summary_json,
    write_var_csv,
)
from .model import ModelParams, simulate
from .risk import rolling_backtest
from .samplers import McmcConfig, default_init, run_chain

__all__ = ["main", "build_parser", "read_config"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("svmala")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _family(text):
    try:
        return Family.parse(text).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_model(p, with_truth: bool):
    p.add_argument("--errors", type=_family, default="gaussian", help="gaussian, ged or t")
    p.add_argument("--nu", type=float, default=None, help="tail parameter (GED shape or t dof)")
    if with_truth:
        p.add_argument("--beta", type=float, default=0.65)
        p.add_argument("--phi", type=float, default=0.98)
        p.add_argument("--sigma", type=float, default=0.15)
        p.add_argument("--n", type=int, default=1000, help="number of observations")


def _add_mcmc(p, schemes=("hybrid", "mala")):
    p.add_argument("--iters", type=int, default=20000)
    p.add_argument("--burnin", type=int, default=10000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--scheme", choices=schemes, default=schemes[0])
    p.add_argument("--eps-vol", type=float, default=0.05)
    p.add_argument("--eps-par", type=float, default=None)
    p.add_argument("--no-adapt", action="store_true", help="keep step sizes fixed")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path, default=None, help="flat key=value settings file")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_data(p):
    p.add_argument("data", type=Path, help="CSV with (value) or (date,value) columns")
    p.add_argument("--input-kind", choices=("returns", "prices"), default="returns")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svmala", description="Langevin MCMC for stochastic volatility models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate returns and log-volatilities")
    _add_model(p, True)
    p.add_argument("--out", type=Path, default=Path("simulated.csv"))
    _add_common(p)

    p = sub.add_parser("fit", help="fit an SV model to a return series")
    _add_data(p)
    _add_model(p, False)
    _add_mcmc(p)
    p.add_argument("--no-demean", action="store_true", help="fit the raw rather than demeaned returns")
    p.add_argument("--store-h", action="store_true", help="keep every h draw in memory")
    p.add_argument("--out", type=Path, default=Path("fit_out"))
    _add_common(p)

    p = sub.add_parser("mc", help="Monte Carlo bias/smse study")
    _add_model(p, True)
    _add_mcmc(p, ("both", "hybrid", "mala"))
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("mc.csv"))
    _add_common(p)

    p = sub.add_parser("var-backtest", help="rolling one-step VaR backtest")
    _add_data(p)
    _add_model(p, False)
    _add_mcmc(p)
    p.add_argument("--warm-iters", type=int, default=None, help="iterations for warm-started windows")
    p.add_argument("--warm-burnin", type=int, default=None)
    p.add_argument("--cold", action="store_true", help="refit every window from the default start")
    p.add_argument("--window", type=int, default=252)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--inner", type=int, default=1000, help="error draws per posterior draw")
    p.add_argument("--no-demean", action="store_true")
    p.add_argument("--out", type=Path, default=Path("var.csv"))
    _add_common(p)

    p = sub.add_parser("describe", help="descriptive statistics of a series")
    _add_data(p)
    p.add_argument("--out", type=Path, default=None, help="also write the statistics as JSON")
    _add_common(p)
    return parser


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _apply_config(sub: argparse.ArgumentParser, settings: dict[str, str], argv: list[str]) -> argparse.Namespace:
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "data")}
    defaults = {}
    for key, value in settings.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            low = value.lower()
            if low not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} expects a boolean, got {value!r}")
            defaults[key] = low in _TRUE
            continue
        try:
            converted = action.type(value) if action.type else value
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and converted not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = converted
    sub.set_defaults(**defaults)
    return sub.parse_args(argv)


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _mcmc_config(args) -> McmcConfig:
    return McmcConfig(
        n_iter=args.iters, burn_in=args.burnin, thin=args.thin, eps_vol=args.eps_vol, eps_par=args.eps_par,
        seed=args.seed, adapt=not args.no_adapt, scheme=args.scheme, store_h=getattr(args, "store_h", False),
    )


def _params(args) -> ModelParams:
    return ModelParams.build(args.beta, args.phi, args.sigma, args.errors, args.nu)


def _cmd_simulate(args):
    params = _params(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    y, h = simulate(params, args.n, np.random.default_rng(args.seed))
    write_series_csv(args.out, y, h)
    print(f"wrote {args.n} observations to {args.out}")


def _cmd_fit(args):
    series = load_series(args.data, args.input_kind, demean=not args.no_demean)
    kind = Family.parse(args.errors)
    cfg = _mcmc_config(args)
    h0, init = default_init(series.values, kind)
    if args.nu is not None and kind.has_tail:
        init = ModelParams.build(init.beta, init.phi, init.sigma, kind, args.nu)
    chain = run_chain(series.values, h0, init, cfg)
    out = Path(args.out)
    write_chain_csv(out / "chain.csv", chain)
    config = {**cfg.to_dict(), "errors": kind.value, "data": str(args.data), "input_kind": args.input_kind,
              "demean": not args.no_demean}
    write_summary_json(out / "summary.json", chain, config, args.seed)
    write_plot_data(out, chain, series.values)
    means = chain.posterior_means()
    shown = ", ".join(f"{k}={v:.4f}" for k, v in means.items() if kind.has_tail or k != "nu")
    print(f"{chain.n_kept} draws; posterior means {shown}; output in {out}")


def _cmd_mc(args):
    truth = _params(args)
    schemes = ("hybrid", "mala") if args.scheme == "both" else (args.scheme,)
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    results = []
    for scheme in schemes:
        cfg = McmcConfig(
            n_iter=args.iters, burn_in=args.burnin, thin=args.thin, eps_vol=args.eps_vol,
            eps_par=args.eps_par, seed=args.seed, adapt=not args.no_adapt, scheme=scheme,
            h_sketch_size=0,
        )
        res = run_mc(McExperiment(truth, args.n, args.reps, cfg), seed=args.seed, workers=args.workers)
        results.append(res)
        for row in res.rows():
            print(f"{scheme:6s} {row['param']:5s} bias={row['bias']:+.4f} smse={row['smse']:.4f}")
    write_mc_csv(args.out, results)


def _cmd_var(args):
    series = load_series(args.data, args.input_kind, demean=not args.no_demean)
    cfg = _mcmc_config(args)
    warm = None
    if args.warm_iters is not None or args.warm_burnin is not None:
        wi = args.warm_iters if args.warm_iters is not None else max(cfg.n_iter // 4, 2)
        wb = args.warm_burnin if args.warm_burnin is not None else min(max(cfg.burn_in // 4, 1), wi - 1)
        warm = replace(cfg, n_iter=wi, burn_in=wb)
    bt = rolling_backtest(series.values, args.window, args.errors, cfg, args.level, args.inner, args.seed,
                          warm_start=not args.cold, warm_cfg=warm)
    write_var_csv(args.out, bt)
    print(f"{bt.exceedance_count} exceedances in {bt.n_windows} windows "
          f"(expected {bt.expected_exceedances:.2f}, failed {int(bt.failed.sum())})")


def _cmd_describe(args):
    stats = describe(load_series(args.data, args.input_kind))
    doc = stats.to_dict()
    text = json.dumps(doc, indent=2)
    print(text)
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text + "\n", encoding="utf-8")


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "mc": _cmd_mc,
    "var-backtest": _cmd_var,
    "describe": _cmd_describe,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        command = args.command
        if args.config is not None:
            # reparse the subcommand with config values as defaults so flags win
            args = _apply_config(_subparser(parser, command), read_config(args.config), argv[1:])
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        _COMMANDS[command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DomainError, ValueError) as exc:
        # invalid parameter values given through flags or config
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
