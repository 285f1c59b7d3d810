"""Logging configuration for the toolkit."""

import logging
from typing import Optional, Union


def setup_logger(
    name: str = "maxplus-tails", level: Optional[Union[int, str]] = None
) -> logging.Logger:
    """
    Set up and return a logger with the specified name and level.

    Records go to stderr; stdout is reserved for JSON reports.

    Args:
        name: Name of the logger
        level: Logging level, numeric or by name (defaults to INFO)

    Returns:
        Configured logger
    """
    if level is None:
        level = logging.INFO
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO

    logger = logging.getLogger(name)

    # Only set up handlers if they don't exist yet to avoid duplicate messages
    if not logging.getLogger().handlers:
        logging.basicConfig(
            level=level,
            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        )

    logger.setLevel(level)
    return logger


def set_global_level(level: Union[int, str]) -> None:
    """Apply a level to every toolkit logger created so far."""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logging.getLogger().setLevel(level)
    for name in list(logging.root.manager.loggerDict):
        if name.startswith("maxplus-tails"):
            logging.getLogger(name).setLevel(level)
