"""Model config loading and report output."""

from .model_loader import load_model, parse_model
from .output_writer import OutputWriter

__all__ = ["load_model", "parse_model", "OutputWriter"]
