"""Deliberately malformed planner: answers every message with garbage.

Useful for verifying that a harness terminates the episode via its planner
error limit instead of crashing.
"""

from __future__ import annotations

import sys


def main() -> int:
    for _ in sys.stdin:
        print("lorem ipsum not a protocol message")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
