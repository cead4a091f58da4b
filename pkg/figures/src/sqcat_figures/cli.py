"""Entry point: render figures from plot spec files.

Each --spec argument names a JSON file describing one PlotSpec;
relative paths inside a spec resolve against the spec file's own
directory.  Exit code 0 when every figure rendered, 2 when any spec
failed; failures name the spec and the reason on stderr and do not
stop the remaining specs.
"""

import argparse
import sys

from sqcat_figures.plots import PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render figures from emitted simulation runs.")
    parser.add_argument("--spec", action="append", required=True,
                        metavar="JSON",
                        help="plot spec file; repeat for several plots")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    failed = False
    for spec_path in args.spec:
        try:
            out = render(PlotSpec.from_json(spec_path))
        except (ValueError, OSError) as exc:
            print(f"render: {spec_path}: {exc}", file=sys.stderr)
            failed = True
        else:
            print(f"render: wrote {out}")
    return 2 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
