"""Run every stage on a system file and print the reports back to back.

    python scripts/run_pipeline.py systems/example2.sys --csv /tmp/ex2.csv
"""

import argparse
import sys

from fracwkb.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("system")
    ap.add_argument("--csv", help="trajectory CSV written by the verify stage")
    args = ap.parse_args()

    worst = 0
    for command in ("analyze", "solve", "verify", "quantize"):
        argv = [command, args.system]
        if command == "verify" and args.csv:
            argv += ["--csv", args.csv]
        code = run(argv)
        print(f"== {command}: exit {code}\n")
        worst = max(worst, code)
        if code in (2, 3):
            break
    sys.exit(worst)


if __name__ == "__main__":
    main()
