"""plotkit <kind> --in <csv...> --out <png/svg> [--title ...] [--threshold ...]"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--threshold", type=float, default=None,
                        help="guide line for theorem_residual figures")
    parser.add_argument("--logy", action="store_true")
    args = parser.parse_args(argv)

    spec = FigureSpec(kind=args.kind, inputs=tuple(args.inputs), output=args.out,
                      title=args.title, threshold=args.threshold, logy=args.logy)
    try:
        meta = render(spec)
    except (SchemaError, OSError) as err:
        print(f"plotkit: {err}", file=sys.stderr)
        return 1
    for key, value in meta.items():
        print(f"{key} = {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
