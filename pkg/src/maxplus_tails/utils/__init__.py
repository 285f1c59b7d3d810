"""Logging, random streams and the worker pool."""

from .logging import setup_logger
from .pool import map_blocks
from .streams import Streams

__all__ = ["setup_logger", "map_blocks", "Streams"]
