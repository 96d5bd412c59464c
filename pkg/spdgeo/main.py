"""spdgeo command line: parser, dispatch and exit statuses."""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from spdgeo import __version__
from spdgeo.api.commands import COMMANDS
from spdgeo.core.config import settings
from spdgeo.core.errors import DomainError, SpdGeoError
from spdgeo.core.logging import configure_logging

logger = logging.getLogger(__name__)

EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdgeo",
        description="Kernel Riemannian and Finsler metrics on positive definite matrices",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help=f"override SPDGEO_LOG_LEVEL (default {settings.log_level})")
    parser.add_argument("--log-format", choices=("text", "json"), help="override SPDGEO_LOG_FORMAT")

    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command.name, help=command.help, description=command.help)
        command.configure(sub)
        sub.set_defaults(handler=command.handler, subparser=sub)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code is None else int(e.code)

    overrides = {}
    if args.log_level:
        overrides["log_level"] = args.log_level
    if args.log_format:
        overrides["log_format"] = args.log_format
    configure_logging(settings.model_copy(update=overrides) if overrides else settings)

    try:
        return args.handler(args)
    except SystemExit as e:
        # flag specs rejected by args.subparser.error
        return EXIT_USAGE if e.code is None else int(e.code)
    except ValidationError as e:
        return _report_error(args.command, DomainError(f"invalid value: {e}", errors=e.errors()))
    except SpdGeoError as e:
        return _report_error(args.command, e)


def _report_error(command: str, error: SpdGeoError) -> int:
    logger.error(f"{command} failed: {error}")
    print(json.dumps(error.to_dict(), default=str), file=sys.stderr)
    return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
