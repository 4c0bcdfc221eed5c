"""External circuits: waveforms, stranded windings and MNA stamps.

Sign convention for every two-terminal element, field ports included: the
branch current flows from the ``plus`` node through the element to the
``minus`` node, and the branch voltage is ``e_plus - e_minus``. The power
absorbed by an element is therefore ``v * i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, GeometryError, NetlistError
from .fem2d import assemble_source

GROUND = "0"


def square_wave(t, T):
    """Unit square wave, high on (T/4, 3T/4) modulo T."""
    if not T > 0:
        raise ConfigurationError("period must be positive")
    x = np.asarray(t, dtype=float) / T - 0.25
    return 2.0 * np.floor(x) - np.floor(2.0 * x) + 1.0


@dataclass(frozen=True)
class Waveform:
    kind: str = "dc"  # "dc" | "square" | "sine"
    amplitude: float = 1.0
    period: float = 1.0

    def __call__(self, t):
        if self.kind == "dc":
            return self.amplitude * np.ones_like(np.asarray(t, dtype=float))
        if self.kind == "square":
            return self.amplitude * square_wave(t, self.period)
        if self.kind == "sine":
            return self.amplitude * np.sin(2.0 * np.pi * np.asarray(t) / self.period)
        raise ConfigurationError(f"unknown waveform {self.kind!r}")

    @property
    def phasor(self):
        """Complex amplitude used by frequency-domain analyses."""
        return complex(self.amplitude)


@dataclass(frozen=True)
class StrandedWindingSpec:
    region: str
    turns: int
    fill_factor: float
    sigma: float

    def __post_init__(self):
        if self.turns < 1:
            raise ConfigurationError("stranded winding needs at least one turn")
        if not 0.0 < self.fill_factor <= 1.0:
            raise ConfigurationError(f"fill_factor must lie in (0, 1], got {self.fill_factor}")
        if not self.sigma > 0:
            raise ConfigurationError("strand conductivity must be positive")


def stranded_coupling(mesh, spec: StrandedWindingSpec):
    """Turn-density coupling vector and DC resistance of a stranded winding.

    ``q = P * i`` is the load caused by a winding current ``i`` and the
    device voltage is ``v = R i + P^T da/dt``.
    """
    tris = mesh.region_triangles(spec.region)
    area = float(mesh.areas[tris].sum())
    if not area > 0:
        raise GeometryError(f"stranded region {spec.region!r} has zero area")
    P = assemble_source(mesh, {spec.region: spec.turns / area})
    if mesh.symmetry == "cartesian":
        length = mesh.depth
    else:
        cx = mesh.nodes[mesh.triangles[tris]][..., 0].mean(axis=1)
        length = 2.0 * np.pi * float(np.sum(cx * mesh.areas[tris]) / area)
    R = spec.turns ** 2 * length / (spec.sigma * spec.fill_factor * area)
    return P, R


@dataclass(frozen=True)
class Element:
    name: str
    kind: str  # "R" | "C" | "V" | "port"
    plus: str
    minus: str
    value: float = 0.0
    waveform: Waveform | None = None


@dataclass
class Netlist:
    elements: list[Element] = field(default_factory=list)

    def add(self, kind, name, plus, minus, value=0.0, waveform=None):
        self.elements.append(Element(name, kind, str(plus), str(minus), value, waveform))
        return self

    @property
    def nodes(self):
        names = []
        for e in self.elements:
            for n in (e.plus, e.minus):
                if n != GROUND and n not in names:
                    names.append(n)
        return names

    def of_kind(self, kind):
        return [e for e in self.elements if e.kind == kind]

    def validate(self, port_names=()):
        names = [e.name for e in self.elements]
        if len(set(names)) != len(names):
            raise NetlistError("duplicate element names")
        for e in self.elements:
            if e.kind not in ("R", "C", "V", "port"):
                raise NetlistError(f"{e.name}: unknown element kind {e.kind!r}")
            if e.plus == e.minus:
                raise NetlistError(f"{e.name}: both terminals on node {e.plus!r}")
            if e.kind in ("R", "C") and not e.value > 0:
                raise NetlistError(f"{e.name}: value must be positive")
            if e.kind == "V" and e.waveform is None:
                raise NetlistError(f"{e.name}: voltage source without waveform")
        g = nx.MultiGraph()
        g.add_node(GROUND)
        for e in self.elements:
            g.add_edge(e.plus, e.minus)
        if not nx.is_connected(g):
            floating = [c for c in nx.connected_components(g) if GROUND not in c]
            raise NetlistError(f"floating subcircuit(s) without ground: {floating}")
        vg = nx.MultiGraph()
        for e in self.of_kind("V"):
            if vg.has_node(e.plus) and vg.has_node(e.minus) and nx.has_path(vg, e.plus, e.minus):
                raise NetlistError(f"{e.name}: loop of voltage sources")
            vg.add_edge(e.plus, e.minus)
        ports = [e.name for e in self.of_kind("port")]
        for p in port_names:
            if ports.count(p) != 1:
                raise NetlistError(f"field port {p!r} must appear exactly once in the netlist")
        for p in ports:
            if p not in port_names:
                raise NetlistError(f"netlist port {p!r} has no field device")


@dataclass(frozen=True)
class MnaStamps:
    """Linear MNA stamps; unknowns are node voltages then source currents.

    KCL rows read ``(Gn + s Cn) e + Bv j + Bp i_port = rhs`` and source rows
    ``Bv^T e = V(t)``; port branch voltages are ``Bp^T e``.
    """

    nodes: list[str]
    Gn: sp.csr_matrix
    Cn: sp.csr_matrix
    Bv: sp.csr_matrix
    Bp: sp.csr_matrix
    sources: list[Element]
    ports: list[str]

    @property
    def n_nodes(self):
        return len(self.nodes)


def _incidence(elements, index, n):
    B = sp.lil_matrix((n, len(elements)))
    for k, e in enumerate(elements):
        if e.plus != GROUND:
            B[index[e.plus], k] = 1.0
        if e.minus != GROUND:
            B[index[e.minus], k] = -1.0
    return B.tocsr()


def mna_assemble(netlist: Netlist, port_names=()):
    """Stamp resistors, capacitors, sources and the incidence of field ports."""
    netlist.validate(port_names)
    nodes = netlist.nodes
    index = {n: k for k, n in enumerate(nodes)}
    n = len(nodes)

    def stamp(kind, weight):
        M = sp.lil_matrix((n, n))
        for e in netlist.of_kind(kind):
            w = weight(e.value)
            for a, sa in ((e.plus, 1.0), (e.minus, -1.0)):
                for b, sb in ((e.plus, 1.0), (e.minus, -1.0)):
                    if a != GROUND and b != GROUND:
                        M[index[a], index[b]] += sa * sb * w
        return M.tocsr()

    Gn = stamp("R", lambda r: 1.0 / r)
    Cn = stamp("C", lambda c: c)
    sources = netlist.of_kind("V")
    port_elems = {e.name: e for e in netlist.of_kind("port")}
    ports = list(port_names)
    Bv = _incidence(sources, index, n)
    Bp = _incidence([port_elems[p] for p in ports], index, n)
    return MnaStamps(nodes, Gn, Cn, Bv, Bp, sources, ports)


def branch_quantities(netlist, node_voltages, source_currents, port_v, port_i, t,
                      prev_node_voltages=None, dt=None, omega=None):
    """Post-process voltages and currents of every branch.

    Port and source quantities come from the solution unknowns; resistor and
    capacitor quantities follow from node voltages and element laws.
    """
    e = dict(node_voltages)
    e[GROUND] = 0.0
    ep = None
    if prev_node_voltages is not None:
        ep = dict(prev_node_voltages)
        ep[GROUND] = 0.0
    src = {s.name: k for k, s in enumerate(netlist.of_kind("V"))}
    out = {}
    for el in netlist.elements:
        vn = e[el.plus] - e[el.minus]
        if el.kind == "R":
            v, i = vn, vn / el.value
        elif el.kind == "C":
            v = vn
            if omega is not None:
                i = 1j * omega * el.value * vn
            elif ep is None or dt is None:
                i = 0.0
            else:
                i = el.value * (vn - (ep[el.plus] - ep[el.minus])) / dt
        elif el.kind == "V":
            v = el.waveform.phasor if omega is not None else float(el.waveform(t))
            i = source_currents[src[el.name]]
        else:
            v, i = port_v[el.name], port_i[el.name]
        out[el.name] = (v, i)
    return out


def kirchhoff_residuals(netlist, branches, node_voltages):
    """Relative KCL and KVL residuals of post-processed branch quantities.

    KCL sums branch currents at every node. KVL is checked as consistency
    of every branch voltage with the node potentials, which is equivalent
    to every loop sum vanishing.
    """
    e = dict(node_voltages)
    e[GROUND] = 0.0
    kcl = {n: 0.0 for n in [GROUND] + netlist.nodes}
    for el in netlist.elements:
        v, i = branches[el.name]
        kcl[el.plus] += i
        kcl[el.minus] -= i
    kvl = [abs(branches[el.name][0] - (e[el.plus] - e[el.minus])) for el in netlist.elements]
    iscale = max(abs(b[1]) for b in branches.values()) or 1.0
    vscale = max(abs(b[0]) for b in branches.values()) or 1.0
    return (max(abs(x) for x in kcl.values()) / iscale, max(kvl) / vscale)


def reference_transformer_netlist(R=1.0, RL=10.0, C=1e-4, period=20e-3, amplitude=1.0,
                                  primary="primary", secondary="secondary",
                                  capacitor="parallel"):
    """Square-wave source with series R on the primary; secondary loaded by
    R_L with C either in parallel (default) or in series with R_L."""
    net = Netlist()
    net.add("V", "Vs", "1", GROUND, waveform=Waveform("square", amplitude, period))
    net.add("R", "R", "1", "2", R)
    net.add("port", primary, "2", GROUND)
    net.add("port", secondary, "3", GROUND)
    if capacitor == "parallel":
        net.add("R", "RL", "3", GROUND, RL)
        net.add("C", "C", "3", GROUND, C)
    elif capacitor == "series":
        net.add("C", "C", "3", "4", C)
        net.add("R", "RL", "4", GROUND, RL)
    else:
        raise ConfigurationError(f"unknown capacitor placement {capacitor!r}")
    return net

