"""Pot inductor study against a fine-mesh self-reference, plus a sweep over
the axial position of the air gap.

The gap position sets where the voltage function u(z) bends. A full-height
gap gives a one-dimensional field and a constant u; a localized gap gives u
a kink, which a few global polynomials resolve worse than local hats.

    python scripts/pot_inductor.py --level 4 --ref-level 5
"""
import argparse

from foilfem.cases import pot_inductor_case
from foilfem.oracle import convergence_study, self_reference

GAPS = {"centre": (14e-3, 16e-3), "top": (28e-3, 30e-3), "full height": (0.0, 30e-3)}
COUNTS = {"legendre": [1, 2, 3, 4, 6, 8, 12], "hat": [3, 6, 12, 24]}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--ref-level", type=int, default=5)
    p.add_argument("--ref-hats", type=int, default=97)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    for name, gap in GAPS.items():
        case = pot_inductor_case(gap=gap)
        W_ref = self_reference(case, args.ref_level, args.ref_hats, "hat")
        rows = convergence_study(case, [args.level], list(COUNTS), COUNTS, W_ref,
                                 workers=args.workers)
        print(f"\ngap {name} {gap[0] * 1e3:g}-{gap[1] * 1e3:g} mm, W_ref = {W_ref:.6e} J")
        for kind in COUNTS:
            errs = "  ".join(f"n={r.n_u}:{r.rel_error:.2e}" for r in rows if r.kind == kind)
            print(f"  {kind:>8}  {errs}")


if __name__ == "__main__":
    main()
