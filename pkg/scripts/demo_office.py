"""Insider demo: the tipped visitor reaches the server room, the untipped
one cannot.  Runs the office fixture through the command-line front end.

    python3 scripts/demo_office.py
"""

import sys
from pathlib import Path

from infratree.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run() -> int:
    query = str(FIXTURES / "office-breach.q")
    print("== tipped insider ==")
    tipped = main(["check", str(FIXTURES / "office.infra"), query])
    print(f"(exit {tipped})\n")
    print("== untipped visitor ==")
    untipped = main(["check", str(FIXTURES / "office-untipped.infra"), query])
    print(f"(exit {untipped})\n")
    print("== synthesized attack tree (tipped) ==")
    main(["attack", str(FIXTURES / "office.infra"), "breach"])
    return 0 if (tipped, untipped) == (1, 0) else 1


if __name__ == "__main__":
    sys.exit(run())
