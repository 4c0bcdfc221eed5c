"""P1 assembly for the out-of-plane vector potential in 2D.

Cartesian models use ``A = A_z e_z`` with nodal unknowns ``a_j`` (Wb/m)
and all volume integrals carry the model depth. Axisymmetric models use
the modified potential ``a' = r A_phi`` (Wb) whose shape functions are
``w_j = N_j / r e_phi``; volume integrals carry ``2 pi r``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, ConfigurationError, MaterialError
from .quadrature import triangle_rule

MU0 = 4e-7 * np.pi
DEFAULT_DEGREE = 8


@dataclass(frozen=True)
class Material:
    """Linear material; ``nu`` holds reluctivities for the B-components
    along the first and second in-plane coordinate."""

    nu: tuple[float, float]
    sigma: float = 0.0

    @classmethod
    def isotropic(cls, mu_r=1.0, sigma=0.0):
        nu = 1.0 / (mu_r * MU0)
        return cls((nu, nu), sigma)

    @property
    def mu(self):
        return (1.0 / self.nu[0], 1.0 / self.nu[1])

    def validate(self, label="?"):
        if not (self.nu[0] > 0 and self.nu[1] > 0):
            raise MaterialError(f"region {label!r}: reluctivity must be positive")
        if self.sigma < 0:
            raise MaterialError(f"region {label!r}: conductivity must be non-negative")


class MaterialMap(dict):
    """Mapping region label -> :class:`Material`."""

    def for_mesh(self, mesh):
        missing = [lab for lab in mesh.region_labels if lab not in self]
        if missing:
            raise AssemblyError(f"no material for regions {missing}")
        for lab in mesh.region_labels:
            self[lab].validate(lab)
        nu = np.array([self[lab].nu for lab in mesh.region_labels])[mesh.tri_region]
        sigma = np.array([self[lab].sigma for lab in mesh.region_labels])[mesh.tri_region]
        return nu, sigma


def _volume_factor(mesh):
    return mesh.depth if mesh.symmetry == "cartesian" else 2.0 * np.pi


def _inv_r_integrals(mesh, degree, tris=None):
    """Quadrature points, weights*area, and 1/r at the points (axisymmetric)."""
    bary, w = triangle_rule(degree)
    idx = slice(None) if tris is None else tris
    pts = mesh.map_points(bary, tris)
    r = pts[..., 0]
    if np.any(r <= 0):
        raise AssemblyError("quadrature point on the symmetry axis")
    wa = mesh.areas[idx][:, None] * w[None, :]
    return bary, wa, 1.0 / r


def _scatter(mesh, elem, shape=None, tris=None):
    t = mesh.triangles if tris is None else mesh.triangles[tris]
    # quadrature products can differ in the last bit between (i, j) and (j, i)
    elem = 0.5 * (elem + elem.transpose(0, 2, 1))
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    A = sp.coo_matrix((elem.ravel(), (rows, cols)), shape=shape or (n, n)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    return A


def assemble_stiffness(mesh, materials: MaterialMap, degree=DEFAULT_DEGREE):
    """Curl-curl stiffness matrix."""
    nu, _ = materials.for_mesh(mesh)
    g = mesh.gradients
    if mesh.symmetry == "cartesian":
        coeff = mesh.depth * mesh.areas
    else:
        _, wa, inv_r = _inv_r_integrals(mesh, degree)
        coeff = 2.0 * np.pi * np.sum(wa * inv_r, axis=1)
    # B along coordinate 1 comes from d/d(coord 2) and vice versa
    gx, gy = g[..., 0], g[..., 1]
    elem = (nu[:, 1, None, None] * gx[:, :, None] * gx[:, None, :]
            + nu[:, 0, None, None] * gy[:, :, None] * gy[:, None, :])
    return _scatter(mesh, coeff[:, None, None] * elem)


_P1_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass(mesh, materials: MaterialMap, degree=DEFAULT_DEGREE):
    """Conductivity-weighted mass matrix."""
    _, sigma = materials.for_mesh(mesh)
    cond = np.flatnonzero(sigma > 0)
    if len(cond) == 0:
        return sp.csr_matrix((mesh.n_nodes, mesh.n_nodes))
    if mesh.symmetry == "cartesian":
        coeff = mesh.depth * sigma[cond] * mesh.areas[cond]
        elem = coeff[:, None, None] * _P1_MASS[None]
    else:
        bary, wa, inv_r = _inv_r_integrals(mesh, degree, cond)
        elem = 2.0 * np.pi * sigma[cond, None, None] * np.einsum(
            "mq,qi,qj->mij", wa * inv_r, bary, bary)
    return _scatter(mesh, elem, tris=cond)


def _density_values(mesh, density, tris, pts):
    if callable(density):
        return np.broadcast_to(np.asarray(density(pts, tris)), pts.shape[:2])
    lab = np.asarray(mesh.region_labels, dtype=object)[mesh.tri_region[tris]]
    return np.array([density[l] for l in lab])[:, None] * np.ones(pts.shape[1])


def assemble_source(mesh, density, regions=None, degree=DEFAULT_DEGREE):
    """Load vector ``q_i = int J . w_i dV``.

    ``density`` is either a mapping region -> J (A/m^2, along the
    out-of-plane direction) or a callable ``f(points, tris)`` returning J at
    the quadrature points ``points`` of shape (m, q, 2).
    """
    if regions is None:
        if callable(density):
            raise ConfigurationError("callable densities need explicit regions")
        regions = list(density)
    tris = mesh.region_triangles(list(regions))
    bary, w = triangle_rule(degree)
    pts = mesh.map_points(bary, tris)
    J = _density_values(mesh, density, tris, pts)
    wa = mesh.areas[tris][:, None] * w[None, :]
    elem = _volume_factor(mesh) * np.einsum("mq,qi->mi", wa * J, bary)
    q = np.zeros(mesh.n_nodes, dtype=elem.dtype)
    np.add.at(q, mesh.triangles[tris], elem)
    return q


@dataclass(frozen=True)
class DirichletMap:
    """Partition of the nodal unknowns into free and prescribed ones."""

    n: int
    fixed: np.ndarray
    values: np.ndarray

    @property
    def free(self):
        mask = np.ones(self.n, dtype=bool)
        mask[self.fixed] = False
        return np.flatnonzero(mask)

    def restrict(self, A):
        f = self.free
        return A[f][:, f]

    def lift(self, A):
        """Right-hand-side contribution ``-A_fc g`` of the prescribed values."""
        if len(self.fixed) == 0:
            return np.zeros(len(self.free))
        return -(A[self.free][:, self.fixed] @ self.values)

    def expand(self, x_free):
        x = np.zeros(self.n, dtype=np.result_type(x_free, self.values))
        x[self.free] = x_free
        x[self.fixed] = self.values
        return x


def dirichlet_map(mesh, tags, value=0.0):
    tags = [tags] if isinstance(tags, str) else list(tags)
    fixed = mesh.tagged_nodes(tags) if tags else np.zeros(0, dtype=int)
    return DirichletMap(mesh.n_nodes, fixed, np.full(len(fixed), value, dtype=float))


@dataclass(frozen=True)
class ReducedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    constraint: DirichletMap

    def expand(self, x_free):
        return self.constraint.expand(x_free)


def apply_dirichlet(matrix, rhs, mesh, tags, value=0.0):
    """Eliminate nodes on the tagged boundary; other boundaries stay natural."""
    dm = dirichlet_map(mesh, tags, value)
    A = sp.csr_matrix(matrix)
    return ReducedSystem(dm.restrict(A), np.asarray(rhs)[dm.free] + dm.lift(A), dm)


def magnetic_energy(K, a, mode="phasor_time_average"):
    """Magnetic energy ``1/2 a^T K a`` or time average ``1/4 Re(a^H K a)``."""
    a = np.asarray(a)
    if K.shape[0] != a.shape[0]:
        raise ConfigurationError(f"dimension mismatch: K is {K.shape}, a has {a.shape[0]}")
    if mode == "instantaneous":
        return 0.5 * float(np.real(a @ (K @ a)))
    if mode == "phasor_time_average":
        return 0.25 * float(np.real(np.conj(a) @ (K @ a)))
    raise ConfigurationError(f"unknown energy mode {mode!r}")


def write_triplets(matrix, path):
    """Write ``row col value`` lines with 0-based indices."""
    A = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for i, j, v in zip(A.row, A.col, A.data):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
