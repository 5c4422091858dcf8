"""Command line interface.

Exit codes: 0 on success, 2 for configuration problems, 3 when a numerical
invariant is violated during a run (positivity drift, trace loss, and the
like). Set EPMSTATS_LOG_LEVEL to adjust verbosity.
"""

from __future__ import annotations

import logging
import os
import sys

import click

from . import __version__
from .config import EXPERIMENTS, QUANTITIES, load_config
from .errors import ConfigError, EpmStatsError
from .experiments import run_experiment

log = logging.getLogger("epmstats")


def _setup_logging():
    level = os.environ.get("EPMSTATS_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(message)s")


def _fail_config(exc: ConfigError):
    click.echo("configuration errors:", err=True)
    for path, msg in exc.issues:
        click.echo(f"  {path}: {msg}", err=True)
    sys.exit(2)


@click.group()
@click.version_option(version=__version__, prog_name="epmstats")
def main():
    """Energy-fluctuation statistics of open quantum systems."""
    _setup_logging()


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the ensemble seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Override the output directory.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for the ensemble kernels.")
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
def run(config_path, seed, out_dir, threads, no_figures):
    """Run the experiment described by CONFIG_PATH."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail_config(exc)
    try:
        result, manifest = run_experiment(
            cfg, out_dir=out_dir, threads=threads, seed=seed, render=not no_figures
        )
    except EpmStatsError as exc:
        click.echo(f"numerical invariant violated: {exc}", err=True)
        sys.exit(3)
    target = out_dir or cfg.output_dir
    log.info("experiment %s: %d states, %d snapshots, %.2f s",
             cfg.experiment, cfg.ensemble.count, cfg.time.n_snapshots, result.wall_time_s)
    for name in manifest["figures"]:
        log.info("figure %s", os.path.join(target, name))
    click.echo(os.path.join(target, manifest["results_csv"]))


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def validate(config_path):
    """Validate CONFIG_PATH and echo the fully materialized configuration."""
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        _fail_config(exc)
    click.echo(cfg.serialize(), nl=False)


@main.command("list-experiments")
def list_experiments():
    """List the named experiments and available quantities."""
    click.echo("experiments:")
    for name in EXPERIMENTS:
        click.echo(f"  {name}")
    click.echo("quantities:")
    for name in QUANTITIES:
        click.echo(f"  {name}")


if __name__ == "__main__":
    main()
