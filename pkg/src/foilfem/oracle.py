"""Reference solutions that do not use the homogenization.

The resolved model meshes every foil and every insulation layer. Each turn
is a solid conductor with its own voltage; all turns carry the same series
current.
"""
from __future__ import annotations

import csv
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, DomainError
from .fem2d import (DEFAULT_DEGREE, Material, MaterialMap, _volume_factor, assemble_mass,
                    assemble_source, assemble_stiffness, dirichlet_map)
from .foilwinding import FoilWindingSpec, VoltageBasis, _chi
from .mesh import GeometrySpec, Region, generate_structured_mesh
from .quadrature import triangle_rule
from .solver import AssembledSystem, FoilDevice, field_energy, solve_frequency

log = logging.getLogger(__name__)


class ResolutionWarning(UserWarning):
    pass


def skin_depth(sigma, mu, f):
    """Skin depth sqrt(2 / (omega mu sigma))."""
    if not (sigma > 0 and mu > 0 and f > 0):
        raise DomainError("skin depth needs positive sigma, mu and f")
    return float(np.sqrt(2.0 / (2.0 * np.pi * f * mu * sigma)))


@dataclass(frozen=True)
class ResolvedFoilModel:
    """Foil winding with every turn meshed separately.

    ``geometry`` and ``materials`` describe the surroundings; the regions
    labelled ``foil.region`` form the envelope that gets cut into turns.
    """

    foil: FoilWindingSpec
    geometry: GeometrySpec
    materials: dict
    dirichlet: tuple = ()
    merge_turns: bool = False  # one conductor spanning all turns

    @classmethod
    def from_case(cls, case, **kw):
        return cls(case.foil, case.geometry, dict(case.materials), tuple(case.dirichlet), **kw)

    def turn_intervals(self):
        """Conductor intervals along alpha, each centred in its pitch cell."""
        f = self.foil
        b = f.foil_width
        gap = 0.5 * (1.0 - f.fill_factor) * b
        k = np.arange(f.turns)
        lo = f.alpha[0] + k * b
        return np.column_stack([lo + gap, lo + b - gap])

    def turn_label(self, k):
        return f"turn_{k}"

    def resolved_geometry(self):
        f = self.foil
        ax = f.alpha_axis
        envelope = [r for r in self.geometry.regions if r.label == f.region]
        if len(envelope) != 1:
            raise ConfigurationError("foil envelope must be a single rectangle")
        env = envelope[0]
        edges = sorted({f.alpha[0], f.alpha[1], *self.turn_intervals().ravel()})
        cond = {(round(a0, 15), round(a1, 15)) for a0, a1 in self.turn_intervals()}
        regions = [r for r in self.geometry.regions if r.label != f.region]
        k = 0
        for a0, a1 in zip(edges[:-1], edges[1:]):
            if a1 - a0 <= 1e-12 * f.width:
                continue
            is_cond = (round(a0, 15), round(a1, 15)) in cond
            label = self.turn_label(k) if is_cond else "insulation"
            if is_cond:
                k += 1
            span = (a0, a1)
            rx, ry = (span, env.y) if ax == 0 else (env.x, span)
            regions.append(Region(label, rx, ry))
        if k != f.turns:
            raise ConfigurationError(f"built {k} turn rectangles, expected {f.turns}")
        return replace(self.geometry, regions=tuple(regions))

    def resolved_materials(self):
        f = self.foil
        mats = MaterialMap(self.materials)
        mats.pop(f.region, None)
        nu_foil = 1.0 / f.mu_foil
        for k in range(f.turns):
            mats[self.turn_label(k)] = Material((nu_foil, nu_foil), f.sigma)
        mats["insulation"] = Material((1.0 / f.mu_ins, 1.0 / f.mu_ins), 0.0)
        return mats

    def mesh(self, nx, ny):
        return generate_structured_mesh(self.resolved_geometry(), nx, ny)


def _turn_conductance(mesh, spec, sigma, labels, degree):
    bary, w = triangle_rule(degree)
    tris = mesh.region_triangles(list(labels))
    pts = mesh.map_points(bary, tris)
    dv = mesh.areas[tris][:, None] * w[None, :] * _volume_factor(mesh)
    if spec.axisymmetric:
        dv = dv * pts[..., 0]
    return float(np.sum(sigma * _chi(spec, pts) ** 2 * dv))


def resolved_device(mesh, model: ResolvedFoilModel, degree=DEFAULT_DEGREE):
    """Per-turn solid-conductor device (or one merged conductor)."""
    spec = model.foil
    groups = [[model.turn_label(k)] for k in range(spec.turns)]
    if model.merge_turns:
        groups = [sum(groups, [])]

    def density(pts, tris):
        return spec.sigma * _chi(spec, pts)

    X = np.column_stack([assemble_source(mesh, density, regions=g, degree=degree)
                         for g in groups])
    G = np.diag([_turn_conductance(mesh, spec, spec.sigma, g, degree) for g in groups])
    c = np.ones(len(groups))
    return FoilDevice(spec.region, X, G, c, spec=spec, basis=None, sigma=spec.sigma)


def check_resolution(mesh, model, omega):
    """Warn when conductors are under-resolved; return the element counts."""
    spec = model.foil
    grid = mesh.xgrid if spec.alpha_axis == 0 else mesh.ygrid
    counts, hmax = [], 0.0
    for a0, a1 in model.turn_intervals():
        inside = grid[(grid >= a0 - 1e-15) & (grid <= a1 + 1e-15)]
        counts.append(len(inside) - 1)
        hmax = max(hmax, float(np.max(np.diff(inside))))
    per_wc = min(counts)
    per_delta = np.inf
    if omega > 0:
        delta = skin_depth(spec.sigma, spec.mu_foil, omega / (2 * np.pi))
        per_delta = delta / hmax
        if delta < spec.conductor_width and per_delta < 4:
            warnings.warn(f"resolved mesh has {per_delta:.2f} elements per skin depth "
                          "(want >= 4)", ResolutionWarning, stacklevel=2)
    if per_wc < 2:
        warnings.warn(f"resolved mesh has {per_wc} elements across a conductor (want >= 2)",
                      ResolutionWarning, stacklevel=2)
    return per_wc, per_delta


def solve_resolved(model: ResolvedFoilModel, mesh, omega, drive=None, degree=DEFAULT_DEGREE):
    """Solve the resolved model; returns ``(state, W_ref, Z_ref)``."""
    check_resolution(mesh, model, omega)
    mats = model.resolved_materials()
    system = AssembledSystem(
        mesh=mesh,
        K=assemble_stiffness(mesh, mats, degree),
        M=assemble_mass(mesh, mats, degree),
        q=np.zeros(mesh.n_nodes),
        dirichlet=dirichlet_map(mesh, list(model.dirichlet)),
        foils=[resolved_device(mesh, model, degree)],
        materials=mats,
    )
    port = model.foil.region
    drive = drive or {port: {"current": 1.0}}
    state = solve_frequency(system, omega, drive=drive)
    return state, field_energy(system, state), state.impedance(port)


# --------------------------------------------------------------------------
# convergence studies

@dataclass(frozen=True)
class StudyPoint:
    level: int
    kind: str  # one of STUDY_KINDS
    n: int


@dataclass(frozen=True)
class StudyRow:
    level: int
    nx: int
    ny: int
    kind: str
    n_u: int
    n_a: int
    W: float
    rel_error: float


# kind -> (basis kind, mesh aligned with hat breakpoints, low-order coupling quadrature)
STUDY_KINDS = {
    "legendre": ("legendre", False, False),
    "hat": ("hat", False, False),  # intersecting meshes, Gauss rule of the FE mesh
    "hat_exact": ("hat", True, False),  # breakpoints are mesh lines: exact integrals
    "hat_lowquad": ("hat", False, True),
}


def _solve_point(case, point, low_degree):
    nx, ny = case.level(point.level)
    if point.kind not in STUDY_KINDS:
        raise ConfigurationError(f"unknown study kind {point.kind!r}; use {list(STUDY_KINDS)}")
    kind, aligned, low = STUDY_KINDS[point.kind]
    basis = VoltageBasis(kind, point.n, case.foil.alpha)
    cdeg = low_degree if low else None
    system, state = case.solve(basis, nx, ny, aligned=aligned, coupling_degree=cdeg)
    return nx, ny, system.n_field, field_energy(system, state)


def resolved_reference(case, nx, ny):
    model = ResolvedFoilModel.from_case(case)
    _, W, _ = solve_resolved(model, model.mesh(nx, ny), case.omega,
                             drive={case.foil.region: {"current": case.current}})
    return W


def self_reference(case, level, n=12, kind="legendre"):
    nx, ny = case.level(level)
    system, state = case.solve(VoltageBasis(kind, n, case.foil.alpha), nx, ny)
    return field_energy(system, state)


def convergence_study(case, levels, kinds, counts, W_ref, workers=1, low_degree=2):
    """Energy error table over mesh levels, basis kinds and basis sizes.

    ``counts`` is a list of basis sizes or a mapping kind -> list.
    """
    if not isinstance(counts, dict):
        counts = {k: counts for k in kinds}
    points = [StudyPoint(L, k, n) for L in levels for k in kinds for n in counts[k]]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_solve_point, [case] * len(points), points,
                                  [low_degree] * len(points)))
    else:
        results = [_solve_point(case, p, low_degree) for p in points]
    rows = []
    for p, (nx, ny, n_a, W) in zip(points, results):
        rows.append(StudyRow(p.level, nx, ny, p.kind, p.n, n_a, W, abs(W - W_ref) / abs(W_ref)))
        log.info("level %d %s n=%d: W=%.6e err=%.3e", p.level, p.kind, p.n, W, rows[-1].rel_error)
    return rows


def lookup(rows, kind, n, level=None):
    level = max(r.level for r in rows) if level is None else level
    for r in rows:
        if r.kind == kind and r.n_u == n and r.level == level:
            return r
    raise KeyError((kind, n, level))


STUDY_HEADER = ["N_a", "N_u", "kind", "W [J]", "rel_error [1]", "level", "nx", "ny"]


def write_study_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STUDY_HEADER)
        for r in rows:
            w.writerow([r.n_a, r.n_u, r.kind, f"{r.W:.16e}", f"{r.rel_error:.16e}",
                        r.level, r.nx, r.ny])
