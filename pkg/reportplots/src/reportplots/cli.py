"""Command line: reportplots render --kind <k> --in <paths> --out <img>."""
from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .readers import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="reportplots",
                                     description="render figures from simulation artifacts")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_render = sub.add_parser("render", help="draw one figure")
    p_render.add_argument("--kind", choices=list(KINDS), required=True)
    p_render.add_argument("--in", dest="inputs", nargs="+", required=True,
                          metavar="PATH", help="input artifact path(s)")
    p_render.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        out = render(FigureSpec(inputs=tuple(args.inputs), kind=args.kind, output=args.out))
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
