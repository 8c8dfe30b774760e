"""Leading-order formulas"""
import click

from msjlab.commands.options import dispatch, output_options
from msjlab.schemas import Regime


@click.command("asymptotic")
@output_options
@click.option("--n", type=int, help="Server count")
@click.option("--n-grid", help="Server counts, e.g. 1e2:1e8:log")
@click.option("--alpha", type=float, help="Power-law exponent")
@click.option("--c", type=float, help="Power-law constant (default 1)")
@click.option("--mu1", type=float, help="Service rate of 1-server jobs")
@click.option("--mun", type=float, help="Service rate of n-server jobs")
@click.option("--regime", type=click.Choice([r.value for r in Regime]), help="Override the classified regime")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Asymptotic throughput and E[Delta(Y_d)] along p_n = c n^-alpha"""
    dispatch(ctx, "asymptotic", config_path, output, fmt, **overrides)
