"""Energy error of the homogenized stand-alone winding against the resolved
reference, over mesh levels, basis families and basis sizes.

    python scripts/convergence_standalone.py --levels 2 3 4 5 --workers 4
"""
import argparse
import logging
from pathlib import Path

from foilfem.cases import scaled_standalone_case
from foilfem.oracle import convergence_study, resolved_reference, write_study_csv

COUNTS = {"legendre": [1, 2, 3, 4, 6, 8], "hat": [1, 3, 6, 12, 24],
          "hat_exact": [3, 6, 12, 24], "hat_lowquad": [3, 6, 12, 24]}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--turns", type=int, default=20)
    p.add_argument("--levels", type=int, nargs="+", default=[2, 3, 4, 5])
    p.add_argument("--reference", type=int, nargs=2, default=[256, 512], metavar=("NX", "NY"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="out/scripts/convergence_standalone.csv")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    case = scaled_standalone_case(turns=args.turns)
    W_ref = resolved_reference(case, *args.reference)
    print(f"resolved reference W = {W_ref:.10e} J on {args.reference[0]}x{args.reference[1]}")
    rows = convergence_study(case, args.levels, list(COUNTS), COUNTS, W_ref, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_study_csv(rows, out)

    finest = max(args.levels)
    print(f"\nlevel {finest}:")
    print(f"{'kind':>12} {'n':>3} {'N_a':>7} {'rel. error':>11}")
    for r in rows:
        if r.level == finest:
            print(f"{r.kind:>12} {r.n_u:>3} {r.n_a:>7} {r.rel_error:11.3e}")
    print(f"\ntable written to {out}")


if __name__ == "__main__":
    main()
