"""Command line entry point.

    corrlasso theory   --config run.yaml
    corrlasso simulate --config run.yaml --trials 100
    corrlasso compare  --n 400 --delta 0.7 --kappa 0.1 --rho 0.7 --sigma2 0.01 \\
                       --lambda-start 0.01 --lambda-stop 0.5 --lambda-count 15
    corrlasso figure 4 --trials 200 -o fig4.csv

Flags override values read from ``--config``. With no subcommand, ``compare``
is assumed.
"""

from __future__ import annotations

import functools
import logging
import sys
from typing import Optional

import click
import yaml

from .config import ConfigError, ProblemConfig, config_from_mapping, config_text_from_csv
from .engine import ConvergenceError
from .harness import run_sweep
from .report import emit_csv, render_csv

log = logging.getLogger("corrlasso")

FIGURE_METRIC = {1: "mse", 2: "phi_on", 3: "phi_off", 4: "eer", 5: "cosine"}


def figure_preset(number: int) -> dict:
    """Experiment settings behind each of the five reference figures."""
    if number not in FIGURE_METRIC:
        raise ConfigError(f"figure: expected 1..5, got {number}")
    raw = {"n": 400, "delta": 0.7, "kappa": 0.1, "rho": 0.7, "xi": 0.001,
           "lambda": {"start": 0.01, "stop": 0.5, "count": 15, "spacing": "linear"},
           "trials": 500, "base_seed": 0, "mode": "both"}
    if number == 1:
        raw["sigma2"] = 0.01
    else:
        raw["snr_db"] = 10.0
    return raw


class DefaultGroup(click.Group):
    def parse_args(self, ctx, args):
        if not args or (args[0] not in self.commands and args[0] not in ("--help", "-h")):
            args = ["compare", *args]
        return super().parse_args(ctx, args)


def _load_raw(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if path.endswith(".csv"):
        text = config_text_from_csv(text)
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw


def _apply_flags(raw: dict, kw: dict) -> dict:
    raw = dict(raw)
    for key in ("n", "delta", "kappa", "xi", "trials", "base_seed"):
        if kw.get(key) is not None:
            raw[key] = kw[key]
    if kw.get("rho") is not None:
        raw.pop("correlation", None)
        raw["rho"] = kw["rho"]
    if kw.get("sigma2") is not None:
        raw.pop("snr_db", None)
        raw["sigma2"] = kw["sigma2"]
    if kw.get("snr_db") is not None:
        raw.pop("sigma2", None)
        raw["snr_db"] = kw["snr_db"]
    if kw.get("lam") is not None:
        raw["lambda"] = kw["lam"]
    grid = {k: kw.get(f"lambda_{k}") for k in ("start", "stop", "count", "spacing")}
    if any(v is not None for v in grid.values()):
        base = raw.get("lambda") if isinstance(raw.get("lambda"), dict) else {}
        raw["lambda"] = {**base, **{k: v for k, v in grid.items() if v is not None}}
    if kw.get("output") is not None:
        raw["output_path"] = kw["output"]
    return raw


def run_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="YAML/JSON config file, or a results CSV to rerun."),
        click.option("--n", type=int, help="Signal dimension."),
        click.option("--delta", type=float, help="Measurements per dimension, m/n."),
        click.option("--kappa", type=float, help="Sparsity fraction k/n."),
        click.option("--rho", type=float, help="Exponential correlation coefficient."),
        click.option("--sigma2", type=float, help="Noise variance."),
        click.option("--snr-db", "snr_db", type=float, help="SNR in dB (SNR = kappa/sigma2)."),
        click.option("--lambda", "lam", type=float, help="Single regularizer value."),
        click.option("--lambda-start", type=float),
        click.option("--lambda-stop", type=float),
        click.option("--lambda-count", type=int),
        click.option("--lambda-spacing", type=click.Choice(["linear", "log"])),
        click.option("--xi", type=float, help="Support detection threshold."),
        click.option("--trials", type=int, help="Monte Carlo trials per grid point."),
        click.option("--base-seed", "base_seed", type=int),
        click.option("-o", "--output", type=click.Path(dir_okay=False),
                     help="CSV output path (stdout when omitted)."),
        click.option("--workers", type=int, default=1, show_default=True,
                     help="Worker processes for the simulation."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _execute(raw: dict, mode: Optional[str], workers: int) -> None:
    if mode is not None:
        raw = dict(raw, mode=mode)
    try:
        config = config_from_mapping(raw)
        results = run_sweep(config, workers=workers)
        if config.output_path:
            path = emit_csv(results, config, config.output_path)
            click.echo(f"wrote {len(results)} rows to {path}", err=True)
        else:
            click.echo(render_csv(results, config), nl=False)
    except (ConfigError, ConvergenceError, ValueError, OSError) as exc:
        raise click.ClickException(str(exc)) from None
    failed = [p for p in results if p.error]
    if failed:
        for p in failed:
            click.echo(f"lambda={p.lam:g}: {p.error}", err=True)
        sys.exit(2)


@click.group(cls=DefaultGroup)
@click.option("-v", "--verbose", count=True, help="Log more (repeatable).")
def main(verbose):
    """Asymptotic LASSO predictions under correlated designs, checked by simulation."""
    level = logging.WARNING - 10 * verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")


def _subcommand(name, mode, help_text):
    @run_options
    def cmd(config_path, workers, **kw):
        raw = _apply_flags(_wrap(_load_raw, config_path), kw)
        _execute(raw, mode, workers)

    cmd.__doc__ = help_text
    return main.command(name)(cmd)


def _wrap(fn, *args):
    try:
        return fn(*args)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from None


_subcommand("theory", "theory", "Saddle point and predictions only.")
_subcommand("simulate", "empirical", "Monte Carlo simulation only.")
_subcommand("compare", "both", "Theory and simulation side by side.")


@main.command("figure")
@click.argument("number", type=click.IntRange(1, 5))
@run_options
def figure(number, config_path, workers, **kw):
    """Rerun the settings of reference figure NUMBER (1-5)."""
    raw = _wrap(figure_preset, number)
    raw.update(_wrap(_load_raw, config_path))
    raw = _apply_flags(raw, kw)
    _execute(raw, None, workers)


if __name__ == "__main__":  # pragma: no cover
    main()
