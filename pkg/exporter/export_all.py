#!/usr/bin/env python3
"""Shim so the documented invocation `export_all.py --out DIR --seed N` works
without installing the package."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
from nml_exporter.cli import main

if __name__ == "__main__":
    sys.exit(main())
