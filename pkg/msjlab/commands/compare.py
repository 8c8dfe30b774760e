"""Exact against asymptotic"""
import click

from msjlab.commands.options import dispatch, output_options


@click.command("compare")
@output_options
@click.option("--alpha", type=float, help="Power-law exponent")
@click.option("--c", type=float, help="Power-law constant (default 1)")
@click.option("--n-grid", help="Ascending server counts (default 1e2:1e6:log)")
@click.option("--mu1", type=float, help="Service rate of 1-server jobs")
@click.option("--mun", type=float, help="Service rate of n-server jobs")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Convergence of the exact values to the leading-order formulas"""
    dispatch(ctx, "compare", config_path, output, fmt, **overrides)
