#!/usr/bin/env python3
"""
Simple realizability of AT-graphs from the command line.

Usage:
    python scripts/satr.py solve instance.json [--json] [--trace]
    python scripts/satr.py check instance.json certificate.json
    python scripts/satr.py oracle instance.json [--max-orderings N]
    python scripts/satr.py gen-hardness --cnf formula.dimacs --out instance.json
    python scripts/satr.py gen-random --count 10 --size 30 --seed 0 [--out DIR]
    python scripts/satr.py stats instance.json [...] [--json]

See src/cli.py for the exit codes.
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.cli import run  # noqa: E402


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
