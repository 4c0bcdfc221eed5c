"""Command-line front end.

    foilfem run <config>      frequency or transient analysis (or a study)
    foilfem study <config>    convergence study -> convergence.csv
    foilfem oracle <config>   resolved-foil reference next to the homogenized model

``<config>`` is a YAML file or the name of a bundled config; see
``foilfem list``. Exit status: 0 success, 1 solver failure, 2 invalid input.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .circuit import branch_quantities
from .config import (FrequencyAnalysis, StudyAnalysis, TransientAnalysis, bundled_configs,
                     load_config)
from .errors import ConfigurationError, FoilFemError, SolverError
from .oracle import (ResolvedFoilModel, check_resolution, convergence_study, resolved_reference,
                     self_reference, skin_depth, solve_resolved, write_study_csv)
from .solver import (assemble_system, check_current_constraint, field_energy, solve_frequency,
                     solve_transient)

log = logging.getLogger("foilfem")

EXIT_OK, EXIT_SOLVER, EXIT_INVALID = 0, 1, 2


def _fmt(x):
    return f"{float(x):.16e}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])


def _system(cfg):
    specs = cfg.foil_specs()
    bases = cfg.bases(specs)
    mesh = cfg.build_mesh(specs, bases)
    return assemble_system(mesh, cfg.materials, foils=list(zip(specs, bases)),
                           strands=cfg.strand_specs(), dirichlet_tags=cfg.dirichlet)


# --------------------------------------------------------------------------

def run_frequency(cfg, out):
    an: FrequencyAnalysis = cfg.analysis
    system = _system(cfg)
    omega = 2.0 * np.pi * an.frequency
    state = solve_frequency(system, omega, drive=an.drive, netlist=cfg.netlist)
    W = field_energy(system, state)
    rows = []
    for d in system.foils + system.strands:
        n_u = d.n if hasattr(d, "G") else 0
        v, i = complex(state.v[d.name]), complex(state.i[d.name])
        z = v / i if i != 0 else complex("nan")
        res = float("nan")
        weak = float("nan")
        if hasattr(d, "G") and an.constraint_samples > 0:
            res = check_current_constraint(system, state, d, an.constraint_samples)
            weak = weak_constraint_residual(system, state, d)
        rows.append([d.name, system.n_field, n_u, W, v.real, v.imag, i.real, i.imag,
                     z.real, z.imag, res, weak])
        log.info("%s: v=%s i=%s Z=%s constraint residual %.3e (weak %.1e)",
                 d.name, v, i, z, res, weak)
    _write_rows(out / "solution.csv",
                ["port", "N_a [1]", "N_u [1]", "W [J]", "v_re [V]", "v_im [V]", "i_re [A]",
                 "i_im [A]", "Z_re [Ohm]", "Z_im [Ohm]", "constraint_residual [1]",
                 "weak_constraint_residual [1]"], rows)
    if an.field_dump:
        a = state.a
        vals = np.column_stack([np.real(a), np.imag(a)])
        unit = "Wb/m" if system.mesh.symmetry == "cartesian" else "Wb"
        system.mesh.write_text(out / "field.txt", vals, (f"a_re[{unit}]", f"a_im[{unit}]"))
    log.info("W = %.6e J, N_a = %d", W, system.n_field)
    return rows


def weak_constraint_residual(system, state, device):
    """Residual of the tested (Galerkin) constraint rows, relative to ``c i``."""
    s = 1j * state.omega if state.omega else 0.0
    u, i = state.u[device.name], state.i[device.name]
    r = -s * (device.X.T @ state.a) + device.G @ u - device.c * i
    scale = max(float(np.abs(device.c * i).max()), float(np.abs(device.G @ u).max()), 1e-300)
    return float(np.abs(r).max() / scale)


def run_transient(cfg, out):
    an: TransientAnalysis = cfg.analysis
    system = _system(cfg)
    traj = solve_transient(system, cfg.netlist, an.t0, an.t_end, an.dt)
    net = cfg.netlist
    ports = system.ports
    header = ["t [s]"]
    header += ["V_s [V]" if k == 0 else f"V_s{k + 1} [V]" for k in range(len(net.of_kind("V")))]
    header += [f"V{k + 1} [V]" for k in range(len(ports))]
    header += [f"I{k + 1} [A]" for k in range(len(ports))]
    nodes = list(traj.node_voltages)
    header += [f"e_{n} [V]" for n in nodes]
    others = [e for e in net.elements if e.kind in ("R", "C", "V")]
    header += [f"v_{e.name} [V]" for e in others] + [f"i_{e.name} [A]" for e in others]
    header += ["W_field [J]", "W_C [J]", "P_in [W]", "P_loss [W]", "kcl [1]", "kvl [1]"]
    rows = []
    for k, t in enumerate(traj.times):
        e = {n: traj.node_voltages[n][k] for n in nodes}
        ep = {n: traj.node_voltages[n][k - 1] for n in nodes} if k > 0 else None
        br = branch_quantities(net, e, traj.source_currents[k],
                               {p: traj.port_v[p][k] for p in ports},
                               {p: traj.port_i[p][k] for p in ports}, t, ep, an.dt)
        p_in = traj.power_in[k - 1] if k > 0 else 0.0
        p_loss = traj.power_loss[k - 1] if k > 0 else 0.0
        rows.append([t, *traj.source_voltages[k], *[traj.port_v[p][k] for p in ports],
                     *[traj.port_i[p][k] for p in ports], *[e[n] for n in nodes],
                     *[br[x.name][0] for x in others], *[br[x.name][1] for x in others],
                     traj.field_energy[k], traj.capacitor_energy[k], p_in, p_loss,
                     traj.kcl[k], traj.kvl[k]])
    _write_rows(out / "timeseries.csv", header, rows)
    log.info("%d steps, max KCL %.2e, max KVL %.2e", len(traj.times) - 1, traj.kcl.max(),
             traj.kvl.max())
    return traj


def run_study(cfg, out):
    an: StudyAnalysis = cfg.analysis
    case = cfg.foil_case(an.frequency, an.current)
    ref = an.reference
    kind = ref["type"]
    if kind == "resolved":
        W_ref = resolved_reference(case, int(ref["nx"]), int(ref["ny"]))
    elif kind == "self":
        W_ref = self_reference(case, int(ref["level"]), int(ref.get("n", 12)),
                               ref.get("kind", "legendre"))
    else:
        W_ref = float(ref["value"])
    log.info("reference energy (%s): %.10e J", kind, W_ref)
    rows = convergence_study(case, an.levels, an.kinds, an.counts, W_ref, workers=an.workers)
    write_study_csv(rows, out / "convergence.csv")
    return rows, W_ref


def run_oracle(cfg, out):
    an = cfg.analysis
    if not isinstance(an, FrequencyAnalysis) or cfg.oracle is None or len(cfg.foils) != 1:
        raise ConfigurationError("oracle runs need a frequency analysis, one foil winding "
                                 "and an 'oracle' block with nx, ny")
    if cfg.strands or cfg.netlist:
        raise ConfigurationError("oracle runs support a single current-driven foil winding")
    spec = cfg.foil_specs()[0]
    port = spec.region
    drive = an.drive or {port: {"current": 1.0}}
    omega = 2.0 * np.pi * an.frequency
    model = ResolvedFoilModel(spec, cfg.geometry, dict(cfg.materials), tuple(cfg.dirichlet))
    mesh = model.mesh(int(cfg.oracle["nx"]), int(cfg.oracle["ny"]))
    per_wc, per_delta = check_resolution(mesh, model, omega)
    state, W_ref, Z_ref = solve_resolved(model, mesh, omega, drive)
    system = _system(cfg)
    hstate = solve_frequency(system, omega, drive=drive)
    W = field_energy(system, hstate)
    Z = complex(hstate.impedance(port))
    mesh_h = system.mesh
    rows = [["resolved", mesh.n_nodes, spec.turns, W_ref, Z_ref.real, Z_ref.imag, 0.0],
            ["homogenized", system.n_field, cfg.basis.n, W, Z.real, Z.imag,
             abs(W - W_ref) / abs(W_ref)]]
    _write_rows(out / "oracle.csv", ["model", "N_a [1]", "N_u [1]", "W [J]", "Z_re [Ohm]",
                                     "Z_im [Ohm]", "rel_error_W [1]"], rows)
    if an.frequency > 0:
        d = skin_depth(spec.sigma, spec.mu_foil, an.frequency)
        log.info("skin depth %.4e m, delta/w_c %.3g, delta/h %.3g", d, d / spec.conductor_width,
                 d / spec.transverse_extent)
    log.info("resolved mesh: %d nodes, %d elements across w_c, %.3g per skin depth",
             mesh.n_nodes, per_wc, per_delta)
    log.info("W_ref %.8e, W_hom %.8e (rel diff %.3e), homogenized mesh %d nodes",
             W_ref, W, rows[1][-1], mesh_h.n_nodes)
    return rows


# --------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="foilfem", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "study", "oracle"):
        sp = sub.add_parser(name)
        sp.add_argument("config", help="YAML file or bundled config name")
        sp.add_argument("--output-dir", default=None,
                        help="overrides output_dir of the config")
    sub.add_parser("list", help="show bundled configs")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list":
        print("\n".join(bundled_configs()))
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.command == "study" and not isinstance(cfg.analysis, StudyAnalysis):
            raise ConfigurationError("the study command needs analysis.type: study")
        out = Path(args.output_dir or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        t = time.perf_counter()
        if args.command == "oracle":
            run_oracle(cfg, out)
        elif isinstance(cfg.analysis, StudyAnalysis):
            run_study(cfg, out)
        elif isinstance(cfg.analysis, TransientAnalysis):
            run_transient(cfg, out)
        else:
            run_frequency(cfg, out)
        log.info("%s finished in %.2f s; outputs in %s", cfg.name, time.perf_counter() - t, out)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (FoilFemError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
