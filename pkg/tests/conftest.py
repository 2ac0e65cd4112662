"""Ensure the tests directory (and its helpers module) is importable
regardless of where pytest is invoked from."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
