#!/usr/bin/env python3
"""
🧮 hrq - high-resolution quantization toolkit

Usage:
    python hrq.py figure1 --dims 1-24 --out figure1.csv
    python hrq.py excess --source gaussian:0,1 --D 1e-2,1e-3,1e-4,1e-5
    python hrq.py lattice decode Z:2 "0.4,-1.6"
    python hrq.py replay figure1.csv.manifest.json
"""

import sys

from src.cli.commands import main

if __name__ == "__main__":
    sys.exit(main())
