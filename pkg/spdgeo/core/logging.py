"""Logging setup shared by the CLI and library callers."""

import logging
import sys

import structlog

from spdgeo.core.config import Settings, settings as default_settings

TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(config: Settings = default_settings) -> None:
    """Install a stderr handler on the root logger according to the settings."""
    level = getattr(logging, config.log_level.upper(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)

    if config.log_format == "json":
        handler.setFormatter(
            structlog.stdlib.ProcessorFormatter(
                processor=structlog.processors.JSONRenderer(),
                foreign_pre_chain=[
                    structlog.stdlib.add_logger_name,
                    structlog.stdlib.add_log_level,
                    structlog.processors.TimeStamper(fmt="iso"),
                ],
            )
        )
    else:
        handler.setFormatter(logging.Formatter(TEXT_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level)
