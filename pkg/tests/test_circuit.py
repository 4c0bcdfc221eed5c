import numpy as np
import pytest
from hypothesis import given, strategies as st

from foilfem.circuit import (GROUND, Netlist, StrandedWindingSpec, Waveform, kirchhoff_residuals,
                             branch_quantities, mna_assemble, reference_transformer_netlist,
                             square_wave, stranded_coupling)
from foilfem.errors import ConfigurationError, NetlistError
from foilfem.fem2d import MaterialMap, Material
from foilfem.mesh import generate_structured_mesh, rectangle
from foilfem.solver import assemble_system, solve_frequency, solve_transient

WALLS = {s: "wall" for s in ("left", "right", "bottom", "top")}


def test_square_wave_levels():
    T = 20e-3
    assert square_wave(0.5 * T, T) == 1.0
    assert square_wave(T, T) == 0.0
    assert square_wave(0.0, T) == 0.0
    assert square_wave(0.3 * T, T) == 1.0 and square_wave(0.8 * T, T) == 0.0
    with pytest.raises(ConfigurationError):
        square_wave(0.0, 0.0)


@given(st.floats(-5.0, 5.0), st.integers(-3, 3))
def test_square_wave_periodic_and_binary(t, k):
    T = 2.0
    x = square_wave(t, T)
    assert x in (0.0, 1.0)
    frac = (t / T) % 1.0
    if min(abs(frac - 0.25), abs(frac - 0.75)) > 1e-9:
        assert square_wave(t + k * T, T) == x


def test_waveforms():
    assert Waveform("dc", 3.0)(1.7) == 3.0
    assert Waveform("sine", 2.0, 4.0)(1.0) == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        Waveform("ramp")(0.0)


def fieldless_system():
    """A tiny air box with one free node and no windings."""
    geo = rectangle(1.0, 1.0, boundary_tags=WALLS)
    mesh = generate_structured_mesh(geo, 2, 2)
    return assemble_system(mesh, MaterialMap({"domain": Material.isotropic()}),
                           dirichlet_tags=("wall",))


def test_divider_through_solver():
    net = Netlist().add("V", "V", "1", GROUND, waveform=Waveform("dc", 6.0))
    net.add("R", "R1", "1", "2", 1.0).add("R", "R2", "2", GROUND, 2.0)
    st_ = solve_frequency(fieldless_system(), 0.0, netlist=net)
    assert st_.node_voltages["2"] == pytest.approx(4.0, rel=1e-14)
    assert st_.source_currents[0] == pytest.approx(-2.0, rel=1e-14)


def test_rc_backward_euler_step():
    R, C, T, V = 2.0, 0.5, 8.0, 3.0
    net = Netlist().add("V", "V", "1", GROUND, waveform=Waveform("square", V, T))
    net.add("R", "R", "1", "2", R).add("C", "C", "2", GROUND, C)
    dt = T / 2  # source is low at t0 = 0 and high at t0 + dt
    tr = solve_transient(fieldless_system(), net, 0.0, dt, dt)
    assert tr.node_voltages["2"][0] == 0.0
    assert tr.node_voltages["2"][1] == pytest.approx(V * dt / (R * C + dt), rel=1e-14)
    assert tr.kcl.max() < 1e-14 and tr.kvl.max() < 1e-14


def test_kirchhoff_residuals_detect_violation():
    net = Netlist().add("R", "R", "1", GROUND, 1.0).add("C", "C", "1", GROUND, 1.0)
    e = {"1": 2.0}
    br = {"R": (2.0, 2.0), "C": (2.0, -2.0)}
    assert kirchhoff_residuals(net, br, e) == (0.0, 0.0)
    br["C"] = (2.5, -1.0)
    kcl, kvl = kirchhoff_residuals(net, br, e)
    assert kcl == pytest.approx(0.5) and kvl == pytest.approx(0.2)


def test_branch_quantities_phasor_capacitor():
    net = Netlist().add("C", "C", "1", GROUND, 2.0)
    br = branch_quantities(net, {"1": 1.0 + 0j}, [], {}, {}, 0.0, omega=3.0)
    assert br["C"][1] == 6j


@pytest.mark.parametrize("build,msg", [
    (lambda n: n.add("R", "a", "1", GROUND, 1).add("R", "a", "1", GROUND, 1), "duplicate"),
    (lambda n: n.add("R", "a", "1", "2", 1).add("R", "b", "1", "2", 1), "floating"),
    (lambda n: n.add("R", "a", "1", GROUND, 0.0), "positive"),
    (lambda n: n.add("R", "a", "1", "1", 1.0), "both terminals"),
    (lambda n: n.add("V", "a", "1", GROUND), "without waveform"),
    (lambda n: n.add("X", "a", "1", GROUND), "unknown element"),
    (lambda n: n.add("V", "a", "1", GROUND, waveform=Waveform())
     .add("V", "b", "1", GROUND, waveform=Waveform()), "loop of voltage sources"),
])
def test_netlist_errors(build, msg):
    with pytest.raises(NetlistError, match=msg):
        build(Netlist()).validate()


def test_port_matching():
    net = reference_transformer_netlist()
    mna_assemble(net, ["primary", "secondary"])
    with pytest.raises(NetlistError, match="exactly once"):
        mna_assemble(net, ["primary", "secondary", "tertiary"])
    with pytest.raises(NetlistError, match="no field device"):
        mna_assemble(net, ["primary"])
    with pytest.raises(ConfigurationError):
        reference_transformer_netlist(capacitor="nowhere")


def test_series_capacitor_variant():
    net = reference_transformer_netlist(capacitor="series")
    assert [e.name for e in net.elements] == ["Vs", "R", "primary", "secondary", "C", "RL"]
    assert mna_assemble(net, ["primary", "secondary"]).n_nodes == 4


@pytest.mark.parametrize("symmetry,origin", [("cartesian", (0.0, 0.0)),
                                             ("axisymmetric", (0.01, 0.0))])
def test_stranded_coupling(symmetry, origin):
    w, h, depth = 0.02, 0.03, 0.4
    geo = rectangle(w, h, label="coil", symmetry=symmetry, depth=depth, origin=origin)
    mesh = generate_structured_mesh(geo, 4, 6)
    P, R = stranded_coupling(mesh, StrandedWindingSpec("coil", 50, 0.6, 5.7e7))
    P2, R2 = stranded_coupling(mesh, StrandedWindingSpec("coil", 100, 0.6, 5.7e7))
    assert R2 == pytest.approx(4 * R, rel=1e-14)
    if symmetry == "cartesian":
        assert P.sum() == pytest.approx(50 * depth, rel=1e-13)
        assert R == pytest.approx(50 ** 2 * depth / (5.7e7 * 0.6 * w * h), rel=1e-13)
    else:
        assert P.sum() == pytest.approx(2 * np.pi * 50, rel=1e-13)
        r_mean = origin[0] + w / 2
        assert R == pytest.approx(50 ** 2 * 2 * np.pi * r_mean / (5.7e7 * 0.6 * w * h), rel=1e-12)


def test_stranded_spec_validation():
    with pytest.raises(ConfigurationError):
        StrandedWindingSpec("c", 0, 0.5, 1.0)
    with pytest.raises(ConfigurationError, match="fill_factor"):
        StrandedWindingSpec("c", 1, 1.5, 1.0)
