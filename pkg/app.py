import logging
import sys

import click
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from config import Config
from utils.errors import PhaseLensError

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s [%(levelname)s] %(name)s: %(message)s'


def configure_logging(level=None):
    handlers = [logging.StreamHandler(sys.stderr)]
    if Config.LOG_FILE:
        handlers.append(logging.FileHandler(Config.LOG_FILE))
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


@click.group()
@click.option('--log-level', default=None, help='Overrides PHASELENS_LOG_LEVEL.')
@click.option('--quiet', is_flag=True, help='No progress bars.')
@click.pass_context
def cli(ctx, log_level, quiet):
    """Stationary distributions and phase transitions of McKean-Vlasov diffusions."""
    configure_logging(log_level)
    ctx.obj = {'progress': not quiet and sys.stderr.isatty()}


# Register command groups
from commands.analysis import COMMANDS as ANALYSIS_COMMANDS
from commands.simulation import COMMANDS as SIMULATION_COMMANDS

for command in ANALYSIS_COMMANDS + SIMULATION_COMMANDS:
    cli.add_command(command)


def run(argv=None):
    """Exit code: 0 success, 2 non-convergence (data written), 1 error."""
    try:
        code = cli.main(args=argv, prog_name='phaselens', standalone_mode=False)
        return int(code or 0)
    except PhaseLensError as e:
        click.echo(f"error [{e.stage or 'run'}]: {e.detail}", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        click.echo('aborted', err=True)
        return 1
    except Exception as e:
        logger.error(f"Unhandled exception: {e}", exc_info=True)
        click.echo(f"error: {e}", err=True)
        return 1


if __name__ == '__main__':
    sys.exit(run())
