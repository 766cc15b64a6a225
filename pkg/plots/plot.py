#!/usr/bin/env python3
"""Standalone launcher: python plot.py curves|heatmap --in <glob> --out <png>."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from extragrad_plots.cli import main

if __name__ == "__main__":
    sys.exit(main())
