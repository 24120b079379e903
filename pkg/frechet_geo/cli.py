"""CLI Interface - Command Line Tool"""

import sys
from typing import Optional

import click

from frechet_geo.config import load_config, parse_config
from frechet_geo.runner import GeometryRunner
from frechet_geo.utils.logger import set_package_level, setup_logger

logger = setup_logger(__name__)


def run_options(command):
    """Flags shared by every subcommand"""
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="Run configuration (key = value)"),
        click.option("--out", "-o", type=click.Path(file_okay=False), default=None,
                     help="Output directory (default: run.out or ./output)"),
        click.option("--seed", type=click.IntRange(min=0), default=None,
                     help="RNG seed (overrides run.seed)"),
        click.option("--tol", type=float, default=None,
                     help="Check tolerance (overrides run.tol)"),
        click.option("--verbose", "-v", is_flag=True, default=False,
                     help="Verbose output"),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def execute(subcommand: str, config_path: Optional[str], out: Optional[str],
            seed: Optional[int], tol: Optional[float], verbose: bool):
    """Load the config, apply flag overrides, run and exit with the run status"""
    if verbose:
        set_package_level("debug", verbose=True)

    try:
        if config_path:
            config = load_config(config_path, subcommand)
        else:
            config = parse_config("", subcommand)
        if seed is not None:
            config.seed = seed
        if tol is not None:
            config.tol = tol
        if out is not None:
            config.out = out
        config.validate()

        runner = GeometryRunner(config, verbose=verbose)
        status = runner.run()

    except Exception as e:
        click.echo(f"\n❌ {subcommand} failed: {e}", err=True)
        if verbose:
            import traceback
            traceback.print_exc()
        sys.exit(1)

    if status == 0:
        click.echo("\n✅ All checks passed")
    else:
        click.echo("\n⚠️  Some checks failed", err=True)
    click.echo(f"📁 Output directory: {runner.output_dir}")
    sys.exit(status)


@click.command()
@run_options
def geodesic(config_path, out, seed, tol, verbose):
    """
    Integrate a geodesic and write trajectory.csv

    Examples:

        python -m frechet_geo geodesic --config flat.cfg --out ./output
    """
    execute("geodesic", config_path, out, seed, tol, verbose)


@click.command()
@run_options
def transport(config_path, out, seed, tol, verbose):
    """Parallel-transport a vector along a geodesic and write transport.csv"""
    execute("transport", config_path, out, seed, tol, verbose)


@click.command("convert-check")
@run_options
def convert_check(config_path, out, seed, tol, verbose):
    """
    Check the Hessian, spray, dissection and chart-change identities on seeded random instances

    Examples:

        python -m frechet_geo convert-check --seed 7 --out ./output
    """
    execute("convert-check", config_path, out, seed, tol, verbose)


@click.command("tower-check")
@run_options
def tower_check(config_path, out, seed, tol, verbose):
    """Integrate at every tower level and report projection residuals"""
    execute("tower-check", config_path, out, seed, tol, verbose)


@click.command()
@run_options
def ch(config_path, out, seed, tol, verbose):
    """Run the spectral u_t = B_k(u, u) model and write ch.csv"""
    execute("ch", config_path, out, seed, tol, verbose)


@click.group()
def cli():
    """Frechet Geo - Christoffel structures and geodesics on projective towers"""
    pass


cli.add_command(geodesic)
cli.add_command(transport)
cli.add_command(convert_check)
cli.add_command(tower_check)
cli.add_command(ch)


def main():
    """Main entry point"""
    cli()


if __name__ == "__main__":
    main()
