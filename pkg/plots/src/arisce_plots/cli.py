"""Command line: `plots <figure-name> --in <csv> --out <img>`."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, render


def cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render sweep CSVs into reproduction figures"
    )
    parser.add_argument("figure", choices=sorted(FIGURES), help="which figure to render")
    parser.add_argument("--in", dest="input_csv", required=True, help="sweep CSV to read")
    parser.add_argument("--out", dest="output_path", required=True, help="image file to write")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        spec = FIGURES[args.figure](args.input_csv, args.output_path)
        drawn = render(spec)
    except (OSError, ValueError) as exc:
        print(f"plots: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output_path} with {len(drawn)} series")
    return 0


def main() -> int:
    return cli(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
