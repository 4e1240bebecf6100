#!/usr/bin/env python3
"""
NLS Laboratory command-line entry point
"""

import os
import sys

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from cli import cli  # noqa: E402

if __name__ == "__main__":
    cli()
