#!/usr/bin/env python
"""
cqregion command-line entry point.

Usage:
  python scripts/cqregion.py curve --channel configs/dephasing_0.1.json --out curve.csv
  python scripts/cqregion.py compare --channel configs/dephasing_0.1.json --out compare.csv
  python scripts/cqregion.py capacities --channel configs/trine.json --out report.json
  python scripts/cqregion.py check --suite lemma2 --seed 7
  python scripts/cqregion.py replay curve.csv --out curve-again.csv

Environment:
  CQREGION_THREADS     worker threads (0 = auto)
  CQREGION_LOG_LEVEL   root log level (default INFO)
"""

from __future__ import annotations

import sys
from pathlib import Path


ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def main() -> None:
    from app.cqregion.cli import main as cli_main

    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
