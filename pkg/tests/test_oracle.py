import csv
import warnings
from dataclasses import replace

import numpy as np
import pytest

from foilfem.cases import scaled_standalone_case, standalone_case
from foilfem.errors import ConfigurationError, DomainError
from foilfem.fem2d import MU0
from foilfem.mesh import generate_structured_mesh
from foilfem.oracle import (STUDY_HEADER, ResolutionWarning, ResolvedFoilModel,
                            check_resolution, convergence_study, lookup, resolved_reference,
                            skin_depth, solve_resolved, write_study_csv)
from foilfem.solver import field_energy


def test_skin_depth():
    d = skin_depth(5.7e7, MU0, 50e3)
    assert d == pytest.approx(0.2981e-3, rel=2e-4)
    assert d / standalone_case().foil.conductor_width == pytest.approx(16.56, rel=1e-3)
    for bad in [(0.0, MU0, 1.0), (1.0, -MU0, 1.0), (1.0, MU0, 0.0)]:
        with pytest.raises(DomainError):
            skin_depth(*bad)


def test_turn_layout():
    model = ResolvedFoilModel.from_case(scaled_standalone_case(turns=4))
    iv = model.turn_intervals()
    b = 2e-5
    assert np.allclose(iv[:, 1] - iv[:, 0], 0.9 * b)
    assert np.allclose(0.5 * (iv[:, 0] + iv[:, 1]), (np.arange(4) + 0.5) * b)
    geo = model.resolved_geometry()
    labels = [r.label for r in geo.regions]
    assert labels.count("insulation") == 5 and "turn_3" in labels
    assert sum(r.area for r in geo.regions) == pytest.approx(4 * b * 4e-3)


def test_single_bar_dc_resistance():
    case = standalone_case(turns=1, width=2e-4, frequency=0.0)
    model = ResolvedFoilModel.from_case(case)
    _, _, Z = solve_resolved(model, model.mesh(8, 8), 0.0)
    w_c = case.foil.conductor_width
    R = case.foil.depth / (case.foil.sigma * w_c * 4e-3)
    assert Z.real == pytest.approx(R, rel=1e-3)


def test_resolution_warnings():
    model = ResolvedFoilModel.from_case(scaled_standalone_case())
    with pytest.warns(ResolutionWarning, match="across a conductor"):
        check_resolution(model.mesh(20, 8), model, model_omega := 2 * np.pi * 50e3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        per_wc, per_delta = check_resolution(model.mesh(128, 8), model, model_omega)
    assert per_wc >= 2 and per_delta > 4


def test_resolved_mesh_self_convergence():
    case = scaled_standalone_case()
    W1 = resolved_reference(case, 64, 128)
    W2 = resolved_reference(case, 128, 256)
    assert abs(W1 - W2) / W2 < 1e-3


def test_merged_turns_equal_single_solid_conductor():
    base = scaled_standalone_case(turns=5, fill_factor=1.0)
    merged = ResolvedFoilModel.from_case(base, merge_turns=True)
    mesh = merged.mesh(20, 8)
    _, W_m, Z_m = solve_resolved(merged, mesh, base.omega)
    one = ResolvedFoilModel.from_case(replace(base, foil=replace(base.foil, turns=1)))
    cuts = tuple(merged.turn_intervals().ravel())
    mesh_1 = generate_structured_mesh(replace(one.resolved_geometry(), align_x=cuts), 20, 8)
    assert np.array_equal(mesh_1.nodes, mesh.nodes)
    _, W_1, Z_1 = solve_resolved(one, mesh_1, base.omega)
    assert W_m == pytest.approx(W_1, rel=1e-12)
    assert Z_m == pytest.approx(Z_1, rel=1e-12)


def test_homogenized_matches_resolved_at_dc():
    case = scaled_standalone_case(frequency=0.0)
    model = ResolvedFoilModel.from_case(case)
    _, W_ref, Z_ref = solve_resolved(model, model.mesh(64, 128), 0.0)
    sys_, st_ = case.solve(case.basis("legendre", 1), 64, 128)
    assert abs(field_energy(sys_, st_) - W_ref) / W_ref < 5e-3
    assert abs(st_.impedance("winding").real - Z_ref.real) / Z_ref.real < 5e-3


def test_resolved_impedance_is_passive():
    case = scaled_standalone_case()
    model = ResolvedFoilModel.from_case(case)
    _, W, Z = solve_resolved(model, model.mesh(64, 32), case.omega)
    assert W > 0 and Z.real > 0 and Z.imag > 0


def test_envelope_must_be_a_single_rectangle():
    case = scaled_standalone_case()
    model = ResolvedFoilModel.from_case(case)
    bad = replace(model, foil=replace(case.foil, region="nowhere"))
    with pytest.raises(ConfigurationError, match="single rectangle"):
        bad.resolved_geometry()


def test_study_rows_and_csv(tmp_path):
    case = scaled_standalone_case(turns=4, base_mesh=(4, 4))
    rows = convergence_study(case, [0, 1], ["legendre", "hat", "hat_exact"], [1, 2], W_ref=1.0)
    assert len(rows) == 12
    for level in (0, 1):
        ws = {lookup(rows, k, 1, level).W for k in ("legendre", "hat", "hat_exact")}
        assert len(ws) == 1  # the single basis function is the constant in every family
    path = tmp_path / "c.csv"
    write_study_csv(rows, path)
    with open(path) as fh:
        table = list(csv.reader(fh))
    assert table[0] == STUDY_HEADER and len(table) == 13
    with pytest.raises(ConfigurationError):
        convergence_study(case, [0], ["spline"], [1], W_ref=1.0)
    with pytest.raises(KeyError):
        lookup(rows, "legendre", 7)
