"""
msjlab command-line entry point
Minimal main.py - all computation is in commands and services
"""
import sys

import click

from msjlab.commands import asymptotic, compare, exact, saturated, simulate, sweep
from msjlab.core.config import settings
from msjlab.core.exceptions import ConfigError
from msjlab.utils.logger import LEVELS, set_level


@click.group(name=settings.APP_TITLE)
@click.version_option(settings.APP_VERSION, prog_name=settings.APP_TITLE)
@click.option("--log-level", type=click.Choice(LEVELS, case_sensitive=False),
              help="Override MSJLAB_LOG_LEVEL for this run")
def cli(log_level):
    """Exact, asymptotic and simulated analysis of multiserver-job FCFS queues"""
    if log_level:
        set_level(log_level)


# Register commands
cli.add_command(exact.command)
cli.add_command(asymptotic.command)
cli.add_command(saturated.command)
cli.add_command(simulate.command)
cli.add_command(sweep.command)
cli.add_command(compare.command)


def main() -> int:
    """Run the CLI; usage errors count as configuration errors"""
    try:
        return cli.main(standalone_mode=False) or 0
    except click.ClickException as e:
        e.show()
        return ConfigError.exit_code
    except click.Abort:
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
