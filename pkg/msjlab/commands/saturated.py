"""Generic saturated-system oracle"""
import click

from msjlab.commands.options import canonical_options, dispatch, output_options
from msjlab.services.config_service import SETTINGS


@click.command("saturated-solve")
@output_options
@canonical_options
@click.option("--setting", type=click.Choice(SETTINGS), help="Named experiment setting at (n, alpha)")
@click.option("--alpha-grid", help="With --setting: solve along these alphas")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Enumerate the saturated chain and solve for mu and E[Delta(Y_d)]"""
    dispatch(ctx, "saturated-solve", config_path, output, fmt, **overrides)
