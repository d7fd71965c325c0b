"""Logging setup shared by the CLI and scripts."""

from __future__ import annotations

import logging

from rich.console import Console
from rich.logging import RichHandler

from pmbpqm import config


def setup_logging(level: str | int | None = None, console: Console | None = None) -> logging.Logger:
    """Attach a RichHandler to the package logger. Safe to call more than once."""
    logger = logging.getLogger("pmbpqm")
    logger.setLevel(level if level is not None else config.LOG_LEVEL)
    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(
            console=console or Console(stderr=True),
            show_path=False,
            rich_tracebacks=True,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)
    logger.propagate = False
    return logger
