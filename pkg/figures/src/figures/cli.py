"""Command-line front end: one subcommand per figure."""

import argparse
import sys

from .plots import (
    plot_density_heatmap,
    plot_difference,
    plot_energy_and_imag,
    plot_initial_density,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oatdcc-figures", description="Render figures from run directories"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("initial", help="initial density with the external well")
    p.add_argument("run_dir")
    p.add_argument("--output")

    p = sub.add_parser("heatmap", help="density as a function of time")
    p.add_argument("run_dir")
    p.add_argument("--output")

    p = sub.add_parser("energy", help="energy deviation and imaginary-density integral")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--output", required=True)

    p = sub.add_parser("difference", help="density difference between two runs")
    p.add_argument("run_dir_a")
    p.add_argument("run_dir_b")
    p.add_argument("--output")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "initial":
            path = plot_initial_density(args.run_dir, args.output)
        elif args.command == "heatmap":
            path = plot_density_heatmap(args.run_dir, args.output)
        elif args.command == "energy":
            path = plot_energy_and_imag(args.run_dirs, args.output)
        else:
            path = plot_difference(args.run_dir_a, args.run_dir_b, args.output)
    except Exception as exc:   # surfaced as exit status for scripting
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
