"""Homogenized foil-winding model.

A foil winding region is described by the coordinate ``alpha`` across the
foils (stacking direction), ``beta`` along the foil tips, and the winding
direction, which is always out of plane here. The voltage function
``u(alpha)`` is expanded in a :class:`VoltageBasis`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .fem2d import DEFAULT_DEGREE, MU0, Material, _volume_factor, assemble_source
from .quadrature import interval_rule, triangle_rule

ORIENTATIONS = ("cartesian", "tube", "disk")


@dataclass(frozen=True)
class FoilWindingSpec:
    region: str
    orientation: str
    alpha: tuple[float, float]
    beta: tuple[float, float]
    turns: int
    fill_factor: float
    sigma: float
    mu_ins: float = MU0
    mu_foil: float = MU0
    depth: float = 1.0
    alpha_axis_cartesian: int = 0

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ConfigurationError(f"unknown foil orientation {self.orientation!r}")
        if not 0.0 < self.fill_factor <= 1.0:
            raise ConfigurationError(f"fill_factor must lie in (0, 1], got {self.fill_factor}")
        if self.turns < 1 or int(self.turns) != self.turns:
            raise ConfigurationError("turns must be a positive integer")
        if not self.alpha[1] > self.alpha[0] or not self.beta[1] > self.beta[0]:
            raise ConfigurationError("foil winding extents must be positive")
        if self.orientation == "tube" and self.alpha[0] <= 0:
            raise ConfigurationError("tube windings need alpha_min > 0")
        if self.sigma < 0 or self.mu_ins <= 0 or self.mu_foil <= 0:
            raise ConfigurationError("invalid foil winding material constants")

    @classmethod
    def from_region(cls, region, orientation, alpha_axis=0, **kw):
        """Build from a rectangular :class:`~foilfem.mesh.Region`."""
        if orientation == "tube":
            alpha_axis = 0
        elif orientation == "disk":
            alpha_axis = 1
        ext = (tuple(region.x), tuple(region.y))
        return cls(region=region.label, orientation=orientation,
                   alpha=ext[alpha_axis], beta=ext[1 - alpha_axis],
                   alpha_axis_cartesian=alpha_axis, **kw)

    @property
    def alpha_axis(self):
        if self.orientation == "tube":
            return 0
        if self.orientation == "disk":
            return 1
        return self.alpha_axis_cartesian

    @property
    def axisymmetric(self):
        return self.orientation != "cartesian"

    @property
    def width(self):
        return self.alpha[1] - self.alpha[0]

    @property
    def foil_width(self):
        return self.width / self.turns

    @property
    def conductor_width(self):
        return self.fill_factor * self.foil_width

    @property
    def transverse_extent(self):
        return self.beta[1] - self.beta[0]


@dataclass(frozen=True)
class VoltageBasis:
    kind: str  # "hat" | "legendre"
    n: int
    interval: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("hat", "legendre"):
            raise ConfigurationError(f"unknown basis kind {self.kind!r}")
        if self.n < 1:
            raise ConfigurationError("basis needs at least one function")
        object.__setattr__(self, "interval", (float(self.interval[0]), float(self.interval[1])))

    @property
    def breakpoints(self):
        """Hat nodes (empty for Legendre and for the single constant hat)."""
        if self.kind == "legendre" or self.n == 1:
            return np.zeros(0)
        return np.linspace(*self.interval, self.n)

    def _checked(self, alpha):
        a = np.asarray(alpha, dtype=float)
        lo, hi = self.interval
        slack = 1e-12 * (hi - lo)
        if np.any(a < lo - slack) or np.any(a > hi + slack):
            raise DomainError(f"alpha outside basis interval [{lo}, {hi}]")
        return a

    def _xi(self, a):
        lo, hi = self.interval
        return (2.0 * a - (lo + hi)) / (hi - lo)

    def value(self, j, alpha):
        """Basis function ``j`` alone (cheaper than :meth:`values` for hats)."""
        if not 0 <= j < self.n:
            raise DomainError(f"basis index {j} out of range 0..{self.n - 1}")
        a = self._checked(alpha)
        if self.kind == "legendre":
            xi = self._xi(a)
            prev, cur = np.ones_like(xi), xi
            if j == 0:
                return prev
            for k in range(1, j):
                prev, cur = cur, ((2 * k + 1) * xi * cur - k * prev) / (k + 1)
            return cur
        if self.n == 1:
            return np.ones_like(a)
        lo, hi = self.interval
        h = (hi - lo) / (self.n - 1)
        return np.maximum(0.0, 1.0 - np.abs(a - self.breakpoints[j]) / h)

    def values(self, alpha):
        """All basis functions at ``alpha``; shape ``alpha.shape + (n,)``."""
        a = self._checked(alpha)
        lo, hi = self.interval
        if self.kind == "legendre":
            xi = self._xi(a)
            out = [np.ones_like(xi)]
            if self.n > 1:
                out.append(xi)
            for k in range(1, self.n - 1):
                out.append(((2 * k + 1) * xi * out[k] - k * out[k - 1]) / (k + 1))
            return np.stack(out, axis=-1)
        if self.n == 1:
            return np.ones(a.shape + (1,))
        nodes = self.breakpoints
        h = (hi - lo) / (self.n - 1)
        return np.maximum(0.0, 1.0 - np.abs(a[..., None] - nodes) / h)


def eval_basis(basis: VoltageBasis, j, alpha):
    return basis.value(j, alpha)


@dataclass(frozen=True)
class HomogenizedMaterial:
    sigma: float
    nu_par: float  # field parallel to the foils
    nu_perp: float  # field along alpha

    def to_material(self, spec: FoilWindingSpec):
        nu = [self.nu_par, self.nu_par]
        nu[spec.alpha_axis] = self.nu_perp
        return Material(tuple(nu), self.sigma)


def mixing_rules(spec: FoilWindingSpec) -> HomogenizedMaterial:
    """Laminate mixing rules for a stack of foils and insulation layers."""
    ff = spec.fill_factor
    if not 0.0 < ff <= 1.0:
        raise ConfigurationError(f"fill_factor must lie in (0, 1], got {ff}")
    mu_par = ff * spec.mu_foil + (1.0 - ff) * spec.mu_ins
    mu_perp = 1.0 / (ff / spec.mu_foil + (1.0 - ff) / spec.mu_ins)
    return HomogenizedMaterial(ff * spec.sigma, 1.0 / mu_par, 1.0 / mu_perp)


def distribution_function(spec: FoilWindingSpec, point):
    """Magnitude of the distribution function (along the winding direction)."""
    p = np.asarray(point, dtype=float)
    lo = (spec.alpha[0], spec.beta[0])
    hi = (spec.alpha[1], spec.beta[1])
    ax = spec.alpha_axis
    a, b = p[..., ax], p[..., 1 - ax]
    tol = 1e-12 * max(spec.width, spec.transverse_extent)
    if (np.any(a < lo[0] - tol) or np.any(a > hi[0] + tol)
            or np.any(b < lo[1] - tol) or np.any(b > hi[1] + tol)):
        raise DomainError("point outside the foil winding region")
    return _chi(spec, p)


def _chi(spec, p):
    if spec.axisymmetric:
        return 1.0 / (2.0 * np.pi * p[..., 0])
    return np.full(p.shape[:-1], 1.0 / spec.depth)


def _check(spec, basis, mesh=None):
    if basis.interval != (float(spec.alpha[0]), float(spec.alpha[1])):
        raise ConfigurationError(
            f"basis interval {basis.interval} differs from foil interval {spec.alpha}")
    if mesh is not None:
        expect = "axisymmetric" if spec.axisymmetric else "cartesian"
        if mesh.symmetry != expect:
            raise ConfigurationError(f"{spec.orientation} winding on a {mesh.symmetry} mesh")


def coupling_density(spec, basis, j, sigma):
    """Artificial current density ``sigma s_j chi`` as used for column j."""
    def density(pts, tris):
        return sigma * eval_basis(basis, j, pts[..., spec.alpha_axis]) * _chi(spec, pts)
    return density


def _degree(basis, degree, power):
    if basis.kind == "legendre":
        return max(degree, power * (basis.n - 1) + (2 - power))
    return degree


def assemble_coupling(mesh, spec, basis, sigma, degree=DEFAULT_DEGREE):
    """Coupling matrix X (n_nodes x n); column j is a source assembly."""
    _check(spec, basis, mesh)
    deg = _degree(basis, degree, 1)
    cols = [assemble_source(mesh, coupling_density(spec, basis, j, sigma),
                            regions=[spec.region], degree=deg)
            for j in range(basis.n)]
    return np.column_stack(cols)


def assemble_conductance(mesh, spec, basis, sigma, degree=DEFAULT_DEGREE):
    """Conductance matrix ``G_ij = int sigma chi.chi s_i s_j dV``."""
    _check(spec, basis, mesh)
    bary, w = triangle_rule(_degree(basis, degree, 2))
    tris = mesh.region_triangles(spec.region)
    G = np.zeros((basis.n, basis.n))
    # bounded chunks: high Legendre orders need rules with hundreds of points
    step = max(1, 2_000_000 // (len(w) * basis.n))
    for k in range(0, len(tris), step):
        t = tris[k:k + step]
        pts = mesh.map_points(bary, t)
        s = basis.values(pts[..., spec.alpha_axis]).reshape(-1, basis.n)
        chi = _chi(spec, pts)
        dv = mesh.areas[t][:, None] * w[None, :] * _volume_factor(mesh)
        if spec.axisymmetric:
            dv = dv * pts[..., 0]
        wq = (sigma * chi * chi * dv).ravel()
        G += s.T @ (wq[:, None] * s)
    return 0.5 * (G + G.T)


def assemble_cvec(spec, basis):
    """Turn vector ``c_i = (1/b) int s_i dalpha``."""
    _check(spec, basis)
    lo, hi = basis.interval
    if basis.kind == "hat" and basis.n > 1:
        edges = basis.breakpoints
        x, w = interval_rule(2)
    else:
        edges = np.array([lo, hi])
        x, w = interval_rule(max(1, (basis.n + 1) // 2 + 1))
    a, b = edges[:-1], edges[1:]
    pts = np.clip((a[:, None] + (b - a)[:, None] * x[None, :]), lo, hi)
    wts = (b - a)[:, None] * w[None, :]
    vals = basis.values(pts)  # (segments, q, n)
    return np.einsum("sq,sqn->n", wts, vals) / spec.foil_width
