#!/usr/bin/env python3
"""Smoke check that every package of the toolkit imports."""

import importlib
import os
import sys

# Add the project root to sys.path if it's not already there
current_dir = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

MODULES = (
    "src.maxplus_tails.config",
    "src.maxplus_tails.models",
    "src.maxplus_tails.core",
    "src.maxplus_tails.storage",
    "src.maxplus_tails.utils",
    "src.maxplus_tails.cli",
)


def check_imports() -> int:
    print(f"Python version: {sys.version}")
    failures = 0
    for name in MODULES:
        try:
            importlib.import_module(name)
            print(f"✓ Successfully imported {name}")
        except Exception as e:
            failures += 1
            print(f"❌ Import error in {name}: {e}")
    if failures:
        return 1
    print("\nAll imports successful!")
    return 0


if __name__ == "__main__":
    sys.exit(check_imports())
