#!/usr/bin/env python3
"""
Command-line entry point

    python odd_waves_cli.py run configs/case1.toml
    python odd_waves_cli.py sweep configs/case1.toml --axis epsilon=0.5,1 --axis beta=0,1
    python odd_waves_cli.py plot runs/case1
    python odd_waves_cli.py ck-compare configs/ck_compare.toml --orders 0,4,8,12
    python odd_waves_cli.py selftest

Exit codes: 0 success, 2 config error, 3 integration failure, 4 I/O error.
"""

import functools
import logging
import sys
from pathlib import Path

import click

from errors import ConfigError, IntegrationFailure, OddWavesError
from settings import get_settings, setup_logging

logger = logging.getLogger(__name__)

REPO_DIR = Path(__file__).resolve().parent


def handle_errors(command):
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except OddWavesError as e:
            click.echo(f"❌ {type(e).__name__}: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper


@click.group()
@click.option("--log-level", default=None, help="Overrides ODDWAVES_LOG_LEVEL")
def cli(log_level):
    """Odd-viscosity surface-wave simulations"""
    setup_logging((log_level or get_settings().log_level).upper())


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--output-root", type=click.Path(path_type=Path), default=None)
@click.option("--plots/--no-plots", default=True, help="Emit plots after the run")
@handle_errors
def run(config_path, output_root, plots):
    """Integrate one configuration"""
    from plotting import emit_plots
    from runner_io import load_config, run_simulation

    config = load_config(config_path)
    root = output_root or get_settings().output_root
    click.echo(f"🚀 Running {config.run_id}: {config.model.value}, N={config.grid.n_points}, t_final={config.t_final}")
    manifest = run_simulation(config, root)
    run_dir = Path(root) / config.run_id
    if plots:
        for path in emit_plots(run_dir):
            click.echo(f"  📈 {path}")
    if not manifest.completed:
        click.echo(f"⚠️  {manifest.termination}: {manifest.message}")
        sys.exit(IntegrationFailure.exit_code)
    click.echo(f"✅ Completed {manifest.n_records} records in {manifest.wall_time:.1f}s -> {run_dir}")


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--axis", "axes", multiple=True, help="name=v1,v2,... over epsilon, alpha_o, beta, mu, amplitude")
@click.option("--output-root", type=click.Path(path_type=Path), default=None)
@click.option("--workers", type=int, default=None, help="Overrides ODDWAVES_WORKERS")
@handle_errors
def sweep(config_path, axes, output_root, workers):
    """Run a parameter grid around one configuration"""
    from runner_io import load_config, parse_axis, run_sweep

    config = load_config(config_path)
    grid = dict(parse_axis(a) for a in axes)
    index = run_sweep(config, grid, output_root, workers)
    click.echo(index.to_string(index=False))
    failed = index[index["termination"] != "completed"]
    if len(failed):
        click.echo(f"⚠️  {len(failed)} of {len(index)} points did not complete")
    else:
        click.echo(f"✅ All {len(index)} points completed")


@cli.command()
@click.argument("run_dir", type=click.Path(path_type=Path))
@handle_errors
def plot(run_dir):
    """Emit plots for an existing run directory"""
    from plotting import emit_plots

    for path in emit_plots(run_dir):
        click.echo(f"📈 {path}")


@cli.command("ck-compare")
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--orders", default="0,4,8,12", help="Comma-separated truncation orders")
@click.option("--fraction", type=float, default=0.05, help="Comparison time as a fraction of T*")
@click.option("--output-root", type=click.Path(path_type=Path), default=None)
@handle_errors
def ck_compare_command(config_path, orders, fraction, output_root):
    """Compare truncated power series with the Runge-Kutta solution"""
    from ck_series import ck_compare
    from runner_io import initial_state, load_config

    config = load_config(config_path)
    if not config.model.is_bidirectional:
        raise ConfigError("ck-compare needs a bidirectional model", field="model")
    try:
        order_list = [int(o) for o in orders.split(",")]
    except ValueError:
        raise ConfigError(f"orders must be integers, got '{orders}'", field="orders") from None
    state = initial_state(config)
    report = ck_compare(state.f, state.f_t, config.params, order_list, fraction, config.step_control)
    out = Path(output_root or get_settings().output_root) / config.run_id
    out.mkdir(parents=True, exist_ok=True)
    report.to_csv(out / "ck_compare.csv", index=False, float_format="%.17g")
    click.echo(report.to_string(index=False))
    if not report["majorants_ok"].all():
        click.echo("⚠️  Majorant ledger exceeded its Catalan bound")
    click.echo(f"✅ Report written to {out / 'ck_compare.csv'}")


@cli.command()
@click.option("--all", "run_all", is_flag=True, help="Include the slow figure reproductions")
def selftest(run_all):
    """Run the invariant test suite"""
    import pytest

    args = ["-q", str(REPO_DIR)]
    if run_all:
        args += ["-m", "slow or not slow"]
    click.echo("🔍 Running self-test suite...")
    code = pytest.main(args)
    click.echo("✅ Self-test passed" if code == 0 else "❌ Self-test failed")
    sys.exit(int(code))


if __name__ == "__main__":
    cli()
