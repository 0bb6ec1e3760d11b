"""Command Line Interface for matinfo."""

import argparse
import sys
from typing import List, Optional

from . import __version__
from .cli_commands import COMMANDS
from .common.config import MatinfoSettings
from .common.constants import ExitCodes
from .common.logging_config import configure_logging, get_logger


def create_parser() -> argparse.ArgumentParser:
    """Root parser with one subparser per registered command."""
    parser = argparse.ArgumentParser(
        prog='matinfo',
        description='Matrix information metrics, Neural Collapse checks and information-loss training',
        epilog='Results go to stdout, logs to stderr. MATINFO_THREADS caps worker and BLAS threads.',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', default=None,
                        help='Logging level (overrides MATINFO_LOG_LEVEL; default: WARNING)')

    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def main(args: Optional[List[str]] = None) -> None:
    """Parse `args` (sys.argv by default) and run the selected command."""
    parser = create_parser()
    args = sys.argv[1:] if args is None else args
    if not args:
        parser.print_help()
        sys.exit(ExitCodes.OK)

    parsed_args = parser.parse_args(args)
    parsed_args.settings = MatinfoSettings()
    configure_logging(parsed_args.log_level or parsed_args.settings.log_level())
    get_logger(__name__).debug(
        "Running %s with MATINFO_THREADS=%d", parsed_args.command, parsed_args.settings.threads()
    )

    if not hasattr(parsed_args, 'func'):
        parser.print_help()
        sys.exit(ExitCodes.OK)
    parsed_args.func(parsed_args)


if __name__ == '__main__':
    main()
