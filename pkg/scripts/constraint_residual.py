"""Pointwise residual of the per-position current constraint against the
number of Legendre functions, for the full and the desk-scale stand-alone
winding and several meshes.

    python scripts/constraint_residual.py
"""
import argparse

from foilfem.cases import scaled_standalone_case, standalone_case
from foilfem.solver import check_current_constraint


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--counts", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6, 8, 10])
    p.add_argument("--meshes", nargs="+", default=["64x128", "128x256"])
    p.add_argument("--samples", type=int, default=10)
    args = p.parse_args()

    for case in (standalone_case(), scaled_standalone_case()):
        print(f"\n{case.name}, f = {case.frequency:g} Hz")
        for m in args.meshes:
            nx, ny = map(int, m.split("x"))
            cells = []
            for n in args.counts:
                system, state = case.solve(case.basis("legendre", n), nx, ny)
                cells.append(f"n={n}:{check_current_constraint(system, state, samples=args.samples):.2e}")
            print(f"  {m:>8}  " + "  ".join(cells))


if __name__ == "__main__":
    main()
