"""Command line entry: render one figure from a results CSV.

    figures --spec fig3 --in results.csv --out fig3.svg

The run manifest is read from manifest.json next to the CSV unless
--manifest points elsewhere; the output format follows the --out extension
unless --format overrides it.
"""

import argparse
import sys

from .data import EmptySelectionError, SchemaError, SeriesCountError
from .render import FIGURE_IDS, FORMATS, FigureSpec, render


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on bad flags, not argparse's 2
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="figures", description=__doc__.splitlines()[0])
    parser.add_argument("--spec", required=True, choices=FIGURE_IDS,
                        help="figure id to render")
    parser.add_argument("--in", dest="csv", required=True, metavar="CSV",
                        help="result CSV produced by the experiment harness")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--manifest", default="",
                        help="run manifest path (default: manifest.json beside the CSV)")
    parser.add_argument("--format", default="", choices=("",) + FORMATS,
                        help="output format (default: from --out extension)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec = FigureSpec(
            figure_id=args.spec,
            csv_path=args.csv,
            out_path=args.out,
            fmt=args.format,
            manifest_path=args.manifest,
        )
        result = render(spec)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, EmptySelectionError, SeriesCountError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.path} ({result.figure_id}, {result.series_count} series)")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
