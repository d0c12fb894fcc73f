"""
Logging setup. Modules log through ``structlog.get_logger(__name__)``;
the CLI calls ``configure_logging`` once before running a command.
"""

import logging
import sys

import structlog

from core.config import Config


def configure_logging(level: str = None, json_logs: bool = None) -> None:
    """Route structlog output to stderr so stdout carries command results only."""
    level_name = (level or Config.LOG_LEVEL).upper()
    use_json = Config.LOG_JSON if json_logs is None else json_logs
    numeric_level = getattr(logging, level_name, logging.INFO)

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=numeric_level, force=True)

    renderer = structlog.processors.JSONRenderer() if use_json else structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric_level),
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=False,
    )
