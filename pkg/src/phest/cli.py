"""Command line entry point ``phest``.

Exit codes: 0 success, 2 configuration error (including penalties below the
admissible minimum), 3 partition error, 4 family too large, 5 support
violation, 6 quadrature failure, 7 other library error, 8 a checked claim
failed under ``--strict``.
"""
from __future__ import annotations

import os
import sys

import click

from . import __version__
from .config import ExperimentConfig, load_document
from .errors import (ConfigError, FamilyTooLargeError, PartitionError, PhestError, QuadratureError,
                     SupportError)

EXIT_CODES = ((ConfigError, 2), (FamilyTooLargeError, 4), (PartitionError, 3), (SupportError, 5),
              (QuadratureError, 6), (PhestError, 7))
EXIT_CLAIM_FAILED = 8


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def default_out_dir() -> str:
    return os.environ.get("PHEST_OUT_DIR", "phest-out")


def _options(f):
    f = click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                     help="TOML or JSON experiment file.")(f)
    f = click.option("--seed", type=int, default=None, help="Override the configured seed.")(f)
    f = click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True)(f)
    f = click.option("--out-dir", type=click.Path(file_okay=False), default=None,
                     help="Output directory (default: $PHEST_OUT_DIR or ./phest-out).")(f)
    f = click.option("--unsafe-penalties", is_flag=True,
                     help="Allow penalty coefficients below the admissible minimum.")(f)
    return f


def _load(config_path, seed, unsafe) -> ExperimentConfig:
    over = {}
    if seed is not None:
        over["seed"] = seed
    if unsafe:
        over["unsafe_penalties"] = True
    return ExperimentConfig.load(config_path, **over)


def _guard(fn):
    """Map library errors to exit codes with a one-line diagnostic."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PhestError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exit_code_for(exc))
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.version_option(__version__, prog_name="phest")
def main():
    """Penalized histogram estimation experiments."""


@main.command("run")
@_options
@_guard
def run_cmd(config_path, seed, workers, out_dir, unsafe_penalties):
    """Replicate the full pipeline and write risk and plot data."""
    from .experiments import run_experiment
    cfg = _load(config_path, seed, unsafe_penalties)
    res = run_experiment(cfg, out_dir or default_out_dir(), workers)
    click.echo(f"mean risk {res.mean:.6g} (stderr {res.stderr:.3g}, {res.replicates} replicates)")


@main.command("rate-study")
@_options
@click.option("--strict", is_flag=True, help="Exit 8 when the slope misses its target.")
@_guard
def rate_cmd(config_path, seed, workers, out_dir, unsafe_penalties, strict):
    """Mean risk over a grid and its log-log slope."""
    from .experiments import run_rate_study
    cfg = _load(config_path, seed, unsafe_penalties)
    res = run_rate_study(cfg, out_dir or default_out_dir(), workers)
    click.echo(f"slope {res.slope:.4f} CI [{res.ci[0]:.4f}, {res.ci[1]:.4f}] target {res.target}")
    if strict and res.within_tolerance is False:
        sys.exit(EXIT_CLAIM_FAILED)


@main.command("spike-study")
@_options
@_guard
def spike_cmd(config_path, seed, workers, out_dir, unsafe_penalties):
    """Compare penalized biases of the regular, spike and tree subfamilies."""
    from .experiments import run_spike_study
    cfg = _load(config_path, seed, unsafe_penalties)
    body = run_spike_study(cfg, out_dir or default_out_dir())
    for name, row in body["subfamilies"].items():
        click.echo(f"{name:8s} min B = {row['min_B']:.6g}")
    click.echo(f"winner: {body['winner']}")


@main.command("tail-check")
@_options
@click.option("--strict", is_flag=True, help="Exit 8 when an exceedance frequency is too high.")
@_guard
def tail_cmd(config_path, seed, workers, out_dir, unsafe_penalties, strict):
    """Monte Carlo check of the chi-square deviation bounds."""
    from .experiments import run_tail_check
    tc = run_tail_check(load_document(config_path), out_dir or default_out_dir(), seed)
    for x, up, b in zip(tc.x_grid, tc.upper, tc.bound):
        click.echo(f"x={x:g}: exceedance {up:.4g} vs bound {b:.4g}")
    if strict and not tc.passes().all():
        sys.exit(EXIT_CLAIM_FAILED)


@main.command("oracle-check")
@_options
@click.option("--strict", is_flag=True, help="Exit 8 when the risk bound is violated.")
@_guard
def oracle_cmd(config_path, seed, workers, out_dir, unsafe_penalties, strict):
    """Monte Carlo risk against the oracle-inequality bound."""
    from .experiments import run_oracle_check
    cfg = _load(config_path, seed, unsafe_penalties)
    v = run_oracle_check(cfg, out_dir or default_out_dir(), workers)
    click.echo(f"risk {v.risk.mean:.6g} +/- {v.risk.stderr:.3g} vs bound {v.bound:.6g}; "
               f"ratio to best model {v.ratio:.3g}; pass={v.passed}")
    if strict and not v.passed:
        sys.exit(EXIT_CLAIM_FAILED)


@main.command("enumerate")
@_options
@click.option("--limit", type=click.IntRange(min=0), default=None,
              help="Write at most this many models.")
@_guard
def enumerate_cmd(config_path, seed, workers, out_dir, unsafe_penalties, limit):
    """Dump the family with weights, penalties and the truncated Sigma."""
    from .experiments import run_enumerate
    cfg = _load(config_path, seed, unsafe_penalties)
    body = run_enumerate(cfg, out_dir or default_out_dir(), limit)
    click.echo(f"{body['n_models']} models, sigma_trunc = {body['sigma_trunc']!r}")


if __name__ == "__main__":
    main()
