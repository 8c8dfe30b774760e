"""Alpha sweeps of simulated queue length"""
import click

from msjlab.commands.options import dispatch, output_options, simulation_options
from msjlab.services.config_service import SETTINGS


@click.command("sweep")
@output_options
@simulation_options
@click.option("--setting", type=click.Choice(SETTINGS), help="Experiment setting (default original)")
@click.option("--n", type=int, help="Server count")
@click.option("--alpha-grid", help="Ascending alphas, e.g. 0:3:0.1")
@click.option("--c", type=float, help="Power-law constant (default 1)")
@click.option("--fractions", help="Load fractions in (0, 1) (default: 0.9 of the stability boundary in capacity mode, 0.95 in stability mode)")
@click.option("--mode", type=click.Choice(["stability", "capacity"]),
              help="Fraction of server capacity or of the saturated throughput (default capacity)")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Simulated mean queue length across alpha for one setting"""
    dispatch(ctx, "sweep", config_path, output, fmt, **overrides)
