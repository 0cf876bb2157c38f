"""Print the phase-shift table of the reference square well.

The well has depth -10 out to radius 8 and the shifts are tabulated for
l = 0..30 at wave numbers 1 and 4 (override with --k). Values are
printed to five decimals, matching the layout used by the inversion
reports.

Run from the repository root:  python3 scripts/forward_tables.py
"""

import argparse

from scatinv import LayeredPotential, phase_shifts


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--k", type=float, nargs="+", default=[1.0, 4.0],
                        help="wave numbers to tabulate (default: 1 4)")
    parser.add_argument("--radius", type=float, default=8.0)
    parser.add_argument("--depth", type=float, default=-10.0)
    parser.add_argument("--l-max", type=int, default=30)
    args = parser.parse_args()

    well = LayeredPotential([args.radius], [args.depth])
    columns = [phase_shifts(well, k, args.l_max) for k in args.k]

    header = "  l " + " ".join(f"{f'k={k:g}':>10}" for k in args.k)
    print(header)
    print("-" * len(header))
    for l in range(args.l_max + 1):
        print(f"{l:3d} " + " ".join(f"{c.shifts[l]:10.5f}" for c in columns))


if __name__ == "__main__":
    main()
