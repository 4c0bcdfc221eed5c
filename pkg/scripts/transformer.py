"""Transient pot transformer in its circuit: writes the waveforms of the
last step size and reports the energy-balance defect of the final period
for a sequence of halved time steps.

    python scripts/transformer.py --steps 100 200 400 800 1600
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from foilfem.cases import pot_transformer_case
from foilfem.solver import solve_transient


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, nargs="+", default=[100, 200, 400, 800, 1600],
                   help="time steps per period")
    p.add_argument("--periods", type=int, default=3)
    p.add_argument("--refine", type=int, default=1)
    p.add_argument("--out", default="out/scripts/transformer.csv")
    args = p.parse_args()

    T = 20e-3
    case = pot_transformer_case()
    system = case.system(refine=args.refine)
    net = case.netlist()
    print(f"{system.mesh.n_nodes} nodes, {system.n_field} field unknowns")
    prev = None
    for steps in args.steps:
        tr = solve_transient(system, net, 0.0, args.periods * T, T / steps)
        d = tr.energy_defect((args.periods - 1) * T, args.periods * T)
        order = "" if prev is None else f"  log2 ratio {np.log2(prev / d):.2f}"
        print(f"dt = T/{steps:<5} defect {d:.4e} J  max KCL {tr.kcl.max():.1e}  "
              f"max KVL {tr.kvl.max():.1e}{order}")
        prev = d

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t [s]", "V_s [V]", "V1 [V]", "V2 [V]", "I1 [A]", "I2 [A]"])
        for k, t in enumerate(tr.times):
            w.writerow([f"{x:.16e}" for x in (t, tr.source_voltages[k][0],
                                              tr.port_v["primary"][k], tr.port_v["secondary"][k],
                                              tr.port_i["primary"][k], tr.port_i["secondary"][k])])
    print(f"waveforms for dt = T/{args.steps[-1]} written to {out}")


if __name__ == "__main__":
    main()
