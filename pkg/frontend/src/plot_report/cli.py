"""Command line entry: reps.csv in, SVG out, checkable scalars on stdout."""

import argparse
import sys

from .figure import build_spec, render
from .reader import read_reps


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render the replication histogram with its normal overlay.",
    )
    p.add_argument("--in", dest="src", required=True, help="replication CSV")
    p.add_argument("--out", dest="out", required=True, help="output SVG path")
    p.add_argument("--theta", type=float, default=2.0)
    p.add_argument("--mu", type=float, default=2.0)
    p.add_argument("--bins", type=int, default=25)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        rows = read_reps(args.src)
        errors = [r.std_error for r in rows]
        spec, warnings = build_spec(errors, args.theta, args.mu, args.bins)
        render(spec, args.out, args.theta, args.mu)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)
    print(f"n_rows = {spec.n_rows}")
    print(f"hist_area = {spec.hist_area!r}")
    print(f"overlay_peak = {spec.overlay_peak!r}")
    print(f"overlay_sd = {spec.sigma!r}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
