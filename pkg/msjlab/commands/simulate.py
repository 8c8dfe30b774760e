"""Open-system simulation"""
import click

from msjlab.commands.options import canonical_options, dispatch, output_options, simulation_options
from msjlab.services.config_service import SETTINGS


@click.command("simulate")
@output_options
@canonical_options
@simulation_options
@click.option("--setting", type=click.Choice(SETTINGS), help="Named experiment setting at (n, alpha)")
@click.option("--lambda", "arrival_rate", type=float, help="Arrival rate")
@click.option("--rho", type=float, help="Arrival rate as a fraction of the saturated throughput")
@click.option("--rho-grid", help="Heavy-traffic check over these load fractions, e.g. 0.9,0.95,0.99")
@click.option("--saturated", is_flag=True, help="Replace arrivals by an infinite backlog")
@click.option("--check-invariants", is_flag=True, help="Assert accounting and FCFS order")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Simulate the MSJ FCFS queue"""
    dispatch(ctx, "simulate", config_path, output, fmt, **overrides)
