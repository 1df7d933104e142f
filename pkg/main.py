#!/usr/bin/env python3
"""
Main application entry point.

Runs the command-line interface, e.g.::

    python main.py run --config configs/table1.json --seed 0 --seed 1 --out runs/
    python main.py gradcheck
"""

import sys

from cli import main


if __name__ == "__main__":
    sys.exit(main())
