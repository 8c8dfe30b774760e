"""Options and dispatch shared by every command"""
from pathlib import Path
from typing import Any, Callable, Optional

import click

from msjlab.schemas import RunSpec
from msjlab.services.run_service import run


def output_options(func: Callable) -> Callable:
    """--config, --output and --format"""
    func = click.option("--format", "fmt", type=click.Choice(["csv", "svg", "both"]), default="csv",
                        show_default=True, help="Artifacts to write; the CSV is always written")(func)
    func = click.option("--output", "-o", default="-", show_default=True,
                        help="CSV path ('-' for stdout); SVGs are written next to it")(func)
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                        help="JSON system config; flags override its values")(func)
    return func


def canonical_options(func: Callable) -> Callable:
    """Parameters of a 1-and-n system"""
    func = click.option("--c", type=float, help="Power-law constant in p_n = c n^-alpha (default 1)")(func)
    func = click.option("--alpha", type=float, help="Power-law exponent; sets p_n = c n^-alpha")(func)
    func = click.option("--mun", type=float, help="Service rate of n-server jobs")(func)
    func = click.option("--mu1", type=float, help="Service rate of 1-server jobs")(func)
    func = click.option("--pn", "p_n", type=float, help="Probability of an n-server job")(func)
    func = click.option("--n", type=int, help="Server count")(func)
    return func


def simulation_options(func: Callable) -> Callable:
    """Job budget, batching and seed of a simulation run"""
    func = click.option("--max-queue", type=int, help="Queue length treated as instability")(func)
    func = click.option("--seed", type=int, help="RNG seed (default 0)")(func)
    func = click.option("--batches", type=int, help="Batches for the confidence intervals")(func)
    func = click.option("--warmup", "warmup_jobs", type=int, help="Discarded completions (default 10%)")(func)
    func = click.option("--jobs", type=int, help="Completed-job budget per point")(func)
    return func


def dispatch(ctx: click.Context, subcommand: str, config_path: Optional[Path], output: str, fmt: str,
             **overrides: Any) -> None:
    """Build the RunSpec, run it and exit with its status"""
    spec = RunSpec(
        subcommand=subcommand,
        config_path=config_path,
        output=output,
        format=fmt,
        overrides={key: value for key, value in overrides.items() if value is not None},
    )
    ctx.exit(run(spec))
