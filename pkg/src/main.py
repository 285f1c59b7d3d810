#!/usr/bin/env python3
"""Main entry point for the maxplus-tails command line."""

import os
import sys

# Add the project root to sys.path if it's not already there
# This keeps the src.maxplus_tails imports working when run as a script
current_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from src.maxplus_tails.cli import dispatch


def main() -> int:
    """Run the subcommand named on the command line."""
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
