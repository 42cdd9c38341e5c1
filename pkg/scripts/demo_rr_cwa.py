"""Refinement loop demo on the ephemeral-id model: the first check finds a
linkability attack, the refresh-on-move patch removes it.

    python3 scripts/demo_rr_cwa.py
"""

import sys
from pathlib import Path

from infratree.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run() -> int:
    return main([
        "rr",
        str(FIXTURES / "cwa.infra"),
        str(FIXTURES / "cwa-privacy.q"),
        "--patches", str(FIXTURES / "cwa-patch-refresh.infra"),
    ])


if __name__ == "__main__":
    sys.exit(run())
