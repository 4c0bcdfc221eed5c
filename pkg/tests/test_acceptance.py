"""Acceptance checks 1-9. Each test prints one PASS/FAIL line; the lines are
repeated in the terminal summary. Tolerances are fixed here and documented
in the README."""
import time

import numpy as np
import pytest

from foilfem.cases import (pot_inductor_case, pot_transformer_case, scaled_standalone_case,
                           standalone_case)
from foilfem.circuit import square_wave
from foilfem.fem2d import assemble_source
from foilfem.foilwinding import VoltageBasis, assemble_cvec, coupling_density
from foilfem.oracle import (ResolvedFoilModel, convergence_study, lookup, resolved_reference,
                            self_reference, solve_resolved)
from foilfem.solver import check_current_constraint, field_energy, solve_frequency, solve_transient

from test_solver import two_coils_and_plate

# ---- pinned tolerances ------------------------------------------------------
IDENTITY_RTOL = 1e-14  # 1: n = 1 hat vs Legendre, entrywise relative
CVEC_RTOL = 1e-12  # 3
DC_RTOL = 5e-3  # 4
AC_ERR_MAX = 1e-2  # 5(a)
STAGNATION_TOL = 1e-6  # 5(b): allowed rise of the relative error at the oracle floor
CONSTRAINT_MAX = 1e-3  # 6
KIRCHHOFF_MAX = 1e-10  # 8
ORDER_BAND = (0.8, 1.2)  # 8: log2 of the defect ratio for one halving of dt
RECIPROCITY_RTOL = 1e-10  # 9

# ---- fixed study settings ---------------------------------------------------
AC_LEVEL = 5  # scaled stand-alone case: base (4, 8) -> 128 x 256
AC_REFERENCE_MESH = (256, 512)
POT_LEVEL, POT_REF_LEVEL, POT_REF_HATS = 4, 5, 97
TRANSIENT_STEPS = (800, 1600)  # steps per period


def rel(a, b):
    return abs(a - b) / abs(b)


def max_rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / np.abs(b).max())


def test_criterion_1_basis_identity(report):
    t = time.perf_counter()
    case = standalone_case()
    sl, stl = case.solve(case.basis("legendre", 1), 32, 64)
    sh, sth = case.solve(case.basis("hat", 1), 32, 64)
    dl, dh = sl.foil(), sh.foil()
    errs = {"X": max_rel(dh.X, dl.X), "G": max_rel(dh.G, dl.G), "c": max_rel(dh.c, dl.c),
            "W": rel(field_energy(sh, sth), field_energy(sl, stl))}
    dt = time.perf_counter() - t
    ok = max(errs.values()) <= IDENTITY_RTOL and dt < 10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errs.items())
    assert report(1, ok, f"max rel diff {detail} (tol {IDENTITY_RTOL:g}); {dt:.1f} s")


def test_criterion_2_routine_reuse(report):
    t = time.perf_counter()
    case = standalone_case()
    worst = []
    for kind in ("legendre", "hat"):
        basis = case.basis(kind, 6)
        system = case.system(basis, 32, 64)
        d = system.foil()
        for j in range(basis.n):
            q = assemble_source(system.mesh, coupling_density(case.foil, basis, j, d.sigma),
                                regions=[case.foil.region])
            worst.append(int(np.count_nonzero(q != d.X[:, j])))
    dt = time.perf_counter() - t
    ok = sum(worst) == 0 and dt < 10
    assert report(2, ok, f"{len(worst)} columns, {sum(worst)} differing entries; {dt:.1f} s")


def test_criterion_3_cvec_law(report):
    t = time.perf_counter()
    spec = standalone_case().foil
    N = spec.turns
    c0_err, ci_max, hat_err = 0.0, 0.0, 0.0
    for n in range(1, 16):
        c = assemble_cvec(spec, VoltageBasis("legendre", n, spec.alpha))
        c0_err = max(c0_err, rel(c[0], N))
        ci_max = max(ci_max, float(np.abs(c[1:]).max(initial=0.0)))
        h = assemble_cvec(spec, VoltageBasis("hat", n, spec.alpha))
        hat_err = max(hat_err, rel(h.sum(), N))
    dt = time.perf_counter() - t
    ok = c0_err <= CVEC_RTOL and ci_max <= CVEC_RTOL * N and hat_err <= CVEC_RTOL and dt < 1
    assert report(3, ok, f"c0 rel {c0_err:.1e}, max|c_i>0| {ci_max:.1e}, hat sum rel "
                         f"{hat_err:.1e} (n = 1..15); {dt:.2f} s")


def test_criterion_4_dc_oracle(report):
    t = time.perf_counter()
    case = scaled_standalone_case(frequency=0.01)
    spec = case.foil
    R_dc = spec.turns * spec.depth / (spec.sigma * spec.conductor_width * spec.transverse_extent)
    system, state = case.solve(case.basis("legendre", 4), 64, 128)
    z = complex(state.impedance(spec.region))
    W = field_energy(system, state)
    model = ResolvedFoilModel.from_case(case)
    _, W_ref, _ = solve_resolved(model, model.mesh(64, 128), case.omega)
    dt = time.perf_counter() - t
    eR, eW = rel(z.real, R_dc), rel(W, W_ref)
    ok = eR < DC_RTOL and eW < DC_RTOL and dt < 30
    assert report(4, ok, f"R rel err {eR:.1e}, W rel err vs resolved {eW:.1e} "
                         f"(tol {DC_RTOL:g}); {dt:.1f} s")


@pytest.fixture(scope="module")
def ac_study():
    t = time.perf_counter()
    case = scaled_standalone_case()
    W_ref = resolved_reference(case, *AC_REFERENCE_MESH)
    rows = convergence_study(case, [AC_LEVEL], ["legendre", "hat"],
                             {"legendre": [1, 2, 3, 4, 6], "hat": [6]}, W_ref)
    return case, W_ref, rows, time.perf_counter() - t


def test_criterion_5_ac_convergence(report, ac_study):
    case, W_ref, rows, dt = ac_study
    err = {n: lookup(rows, "legendre", n).rel_error for n in (1, 2, 3, 4, 6)}
    hat6 = lookup(rows, "hat", 6).rel_error
    ok_a = err[6] < AC_ERR_MAX
    seq = [err[n] for n in (1, 2, 3, 4, 6)]
    ok_b = all(b <= a + STAGNATION_TOL for a, b in zip(seq, seq[1:]))
    ok_c = err[3] < hat6
    ok = ok_a and ok_b and ok_c and dt < 300
    errs = " ".join(f"{e:.3e}" for e in seq)
    assert report(5, ok, f"(a) {'ok' if ok_a else 'no'} (b) {'ok' if ok_b else 'no'} "
                         f"(c) {'ok' if ok_c else 'no'}: legendre n=1,2,3,4,6 err {errs}; "
                         f"hat n=6 err {hat6:.3e}; {dt:.0f} s")


def test_criterion_6_current_constraint(report):
    t = time.perf_counter()
    case = standalone_case()
    res = {}
    for n in (1, 2, 3, 4, 6, 8):
        system, state = case.solve(case.basis("legendre", n), 64, 128)
        res[n] = check_current_constraint(system, state, samples=10)
    seq = list(res.values())
    # odd and even modes decouple by symmetry, so equal neighbours are expected
    decreasing = all(b <= a * (1 + 1e-6) for a, b in zip(seq, seq[1:])) and seq[-1] < seq[0]
    scaled = scaled_standalone_case()
    ss, sst = scaled.solve(scaled.basis("legendre", 4), 64, 128)
    r_scaled = check_current_constraint(ss, sst, samples=10)
    dt = time.perf_counter() - t
    ok = res[4] < CONSTRAINT_MAX and decreasing and dt < 30
    detail = " ".join(f"n={n}:{r:.2e}" for n, r in res.items())
    assert report(6, ok, f"N=100 residual {detail} (tol {CONSTRAINT_MAX:g} at n=4, "
                         f"decreasing {decreasing}); N=20 desk case n=4: {r_scaled:.2e}; "
                         f"{dt:.1f} s")


def test_criterion_7_pot_inductor(report):
    t = time.perf_counter()
    case = pot_inductor_case()
    W_ref = self_reference(case, POT_REF_LEVEL, POT_REF_HATS, "hat")
    rows = convergence_study(case, [POT_LEVEL], ["legendre", "hat"],
                             {"legendre": [3], "hat": [6]}, W_ref)
    leg3 = lookup(rows, "legendre", 3).rel_error
    hat6 = lookup(rows, "hat", 6).rel_error
    dt = time.perf_counter() - t
    ok = np.isfinite(W_ref) and W_ref > 0 and leg3 < hat6 and dt < 300
    assert report(7, ok, f"err(legendre,3) {leg3:.3e} vs err(hat,6) {hat6:.3e} against "
                         f"hat n={POT_REF_HATS} at level {POT_REF_LEVEL}; {dt:.0f} s")


def test_criterion_8_transformer_transient(report):
    t = time.perf_counter()
    T = 20e-3
    wave_ok = square_wave(0.5 * T, T) == 1.0 and square_wave(T, T) == 0.0
    case = pot_transformer_case()
    system = case.system()
    net = case.netlist()
    defects, kirchhoff = [], 0.0
    for steps in TRANSIENT_STEPS:
        tr = solve_transient(system, net, 0.0, 3 * T, T / steps)
        kirchhoff = max(kirchhoff, tr.kcl.max(), tr.kvl.max())
        defects.append(tr.energy_defect(2 * T, 3 * T))
    order = float(np.log2(defects[0] / defects[1]))
    dt = time.perf_counter() - t
    ok = (wave_ok and kirchhoff < KIRCHHOFF_MAX and ORDER_BAND[0] <= order <= ORDER_BAND[1]
          and dt < 300)
    assert report(8, ok, f"square wave {'ok' if wave_ok else 'no'}; max KCL/KVL "
                         f"{kirchhoff:.1e}; defect (3rd period) {defects[0]:.3e} -> "
                         f"{defects[1]:.3e}, log2 ratio {order:.2f}; {dt:.0f} s")


def test_criterion_9_structural_invariants(report):
    t = time.perf_counter()
    rng = np.random.default_rng(0)
    checks = {}
    case = pot_transformer_case(base_mesh=(15, 20))
    system = case.system(n=5)
    K, M, G = system.K, system.M, system.foil().G
    checks["K sym"] = (K != K.T).nnz == 0
    checks["M sym"] = (M != M.T).nnz == 0
    checks["G sym"] = np.array_equal(G, G.T)
    xs = rng.standard_normal((100, K.shape[0]))
    checks["K psd"] = min(x @ (K @ x) for x in xs) >= 0
    checks["M psd"] = min(x @ (M @ x) for x in xs) >= 0
    sc = standalone_case()
    Gl = sc.system(sc.basis("legendre", 8), 16, 32).foil().G
    off = np.abs(Gl - np.diag(np.diag(Gl))).max() / np.abs(np.diag(Gl)).max()
    checks["G diag"] = off <= 1e-15
    rec = []
    two = two_coils_and_plate()
    for f in (50.0, 5e3):
        w = 2 * np.pi * f
        z21 = solve_frequency(two, w, {"c1": {"current": 1.0}}).v["c2"]
        z12 = solve_frequency(two, w, {"c2": {"current": 1.0}}).v["c1"]
        rec.append(rel(z21, z12))
        z21 = solve_frequency(system, w, {"primary": {"current": 1.0}}).v["secondary"]
        z12 = solve_frequency(system, w, {"secondary": {"current": 1.0}}).v["primary"]
        rec.append(rel(z21, z12))
    checks["reciprocity"] = max(rec) <= RECIPROCITY_RTOL
    dt = time.perf_counter() - t
    ok = all(checks.values()) and dt < 60
    failed = [k for k, v in checks.items() if not v]
    assert report(9, ok, f"failed {failed or 'none'}; G off-diag {off:.1e}; reciprocity "
                         f"{max(rec):.1e}; {dt:.1f} s")
