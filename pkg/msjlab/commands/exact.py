"""Closed-form 1-and-n evaluation"""
import click

from msjlab.commands.options import canonical_options, dispatch, output_options


@click.command("exact")
@output_options
@canonical_options
@click.option("--alpha-grid", help="Evaluate along p_n = c n^-alpha for these alphas, e.g. 0.2:3.0:0.2")
@click.option("--normalize", type=click.Choice(["none", "n", "n2"]), help="Also report mu / n or mu / n^2")
@click.option("--states", is_flag=True, help="Also emit the per-state distributions")
@click.pass_context
def command(ctx, config_path, output, fmt, **overrides):
    """Exact throughput and E[Delta(Y_d)] of a 1-and-n system"""
    dispatch(ctx, "exact", config_path, output, fmt, **overrides)
