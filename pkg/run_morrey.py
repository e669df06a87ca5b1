#!/usr/bin/env python3
"""
Launcher for the Morrey toolkit command line
Same as `python -m morrey`; run from the repository root
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from morrey.cli import run  # noqa: E402

if __name__ == "__main__":
    sys.exit(run(sys.argv[1:]))
