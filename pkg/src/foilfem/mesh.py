"""Structured triangular meshes of rectangular multi-region geometries.

Coordinates are ``(x, y)`` for Cartesian models and ``(r, z)`` for
axisymmetric ones; the first coordinate is always stored in column 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, GeometryError

SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Region:
    label: str
    x: tuple[float, float]
    y: tuple[float, float]
    void: bool = False  # tiles the box but is not meshed (e.g. an ideal yoke)

    @property
    def area(self):
        return (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])

    def contains(self, px, py):
        return (self.x[0] <= px <= self.x[1]) and (self.y[0] <= py <= self.y[1])


@dataclass(frozen=True)
class GeometrySpec:
    symmetry: str  # "cartesian" | "axisymmetric"
    regions: tuple[Region, ...]
    depth: float = 1.0  # model length along z for cartesian models
    boundary_tags: dict = field(default_factory=dict)
    align_x: tuple[float, ...] = ()
    align_y: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "align_x", tuple(float(a) for a in self.align_x))
        object.__setattr__(self, "align_y", tuple(float(a) for a in self.align_y))
        self.validate()

    @property
    def bbox(self):
        x0 = min(r.x[0] for r in self.regions)
        x1 = max(r.x[1] for r in self.regions)
        y0 = min(r.y[0] for r in self.regions)
        y1 = max(r.y[1] for r in self.regions)
        return (x0, x1), (y0, y1)

    def region(self, label):
        """The rectangle labelled ``label``; the label must be unique."""
        hits = [r for r in self.regions if r.label == label]
        if len(hits) != 1:
            raise GeometryError(f"region {label!r} matches {len(hits)} rectangles")
        return hits[0]

    def validate(self):
        if self.symmetry not in ("cartesian", "axisymmetric"):
            raise GeometryError(f"unknown symmetry {self.symmetry!r}")
        if not self.regions:
            raise GeometryError("geometry has no regions")
        if self.symmetry == "cartesian" and not self.depth > 0:
            raise GeometryError("cartesian depth must be positive")
        kinds = {}
        for r in self.regions:
            if kinds.setdefault(r.label, r.void) != r.void:
                raise GeometryError(f"region {r.label!r} is both void and meshed")
        for r in self.regions:
            if not (r.x[1] > r.x[0] and r.y[1] > r.y[0]):
                raise GeometryError(f"region {r.label!r} is degenerate")
            if self.symmetry == "axisymmetric" and r.x[0] < 0:
                raise GeometryError(f"region {r.label!r} has negative radius")
        (bx0, bx1), (by0, by1) = self.bbox
        scale = max(bx1 - bx0, by1 - by0)
        tol = 1e-12 * scale * scale
        for i, a in enumerate(self.regions):
            for b in self.regions[i + 1:]:
                ox = min(a.x[1], b.x[1]) - max(a.x[0], b.x[0])
                oy = min(a.y[1], b.y[1]) - max(a.y[0], b.y[0])
                if ox > 0 and oy > 0 and ox * oy > tol:
                    raise GeometryError(f"regions {a.label!r} and {b.label!r} overlap")
        total = sum(r.area for r in self.regions)
        if abs(total - (bx1 - bx0) * (by1 - by0)) > 1e-9 * (bx1 - bx0) * (by1 - by0):
            raise GeometryError("regions do not tile their bounding box")
        for a in self.align_x:
            if not bx0 <= a <= bx1:
                raise GeometryError(f"alignment coordinate x={a} outside bounding box")
        for a in self.align_y:
            if not by0 <= a <= by1:
                raise GeometryError(f"alignment coordinate y={a} outside bounding box")
        for side in self.boundary_tags:
            if side not in SIDES:
                raise GeometryError(f"unknown boundary side {side!r}")


def _grid_lines(mandatory, lo, hi, n):
    pts = sorted(float(p) for p in mandatory)
    tol = 1e-9 * (hi - lo)
    merged = [lo]
    for p in pts:
        if p - merged[-1] > tol:
            merged.append(p)
    if hi - merged[-1] > tol:
        merged.append(hi)
    else:
        merged[-1] = hi
    h = (hi - lo) / n
    lines = [merged[0]]
    for a, b in zip(merged[:-1], merged[1:]):
        k = max(1, math.ceil((b - a) / h - 1e-9))
        lines.extend(a + (b - a) * np.arange(1, k + 1) / k)
        lines[-1] = b
    return np.asarray(lines)


@dataclass(frozen=True, eq=False)
class Mesh:
    symmetry: str
    depth: float
    nodes: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counter-clockwise
    tri_region: np.ndarray  # (m,) index into region_labels
    region_labels: tuple[str, ...]
    boundary_edges: np.ndarray  # (k, 2)
    edge_tags: tuple[str, ...]
    xgrid: np.ndarray
    ygrid: np.ndarray
    cell_tris: np.ndarray  # (ncx, ncy, 2), -1 for void cells

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def region_index(self):
        return {lab: np.flatnonzero(self.tri_region == k)
                for k, lab in enumerate(self.region_labels)}

    def region_triangles(self, labels):
        if isinstance(labels, str):
            labels = [labels]
        out = []
        for lab in labels:
            if lab not in self.region_index:
                raise GeometryError(f"mesh has no region {lab!r}")
            out.append(self.region_index[lab])
        return np.concatenate(out) if out else np.zeros(0, dtype=int)

    def region_nodes(self, label):
        return np.unique(self.triangles[self.region_triangles(label)])

    @cached_property
    def areas(self):
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def gradients(self):
        """Constant gradients of the three P1 shape functions, shape (m, 3, 2)."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        twoA = 2.0 * self.areas[:, None]
        return np.stack([b / twoA, c / twoA], axis=2)

    def tagged_nodes(self, tags):
        if isinstance(tags, str):
            tags = [tags]
        known = set(self.edge_tags)
        for t in tags:
            if t not in known:
                raise ConfigurationError(f"unknown boundary tag {t!r}")
        sel = np.isin(np.asarray(self.edge_tags, dtype=object), list(tags))
        return np.unique(self.boundary_edges[sel])

    def map_points(self, bary, tris=None):
        """Physical coordinates of barycentric points, shape (m, q, 2)."""
        p = self.nodes[self.triangles if tris is None else self.triangles[tris]]
        return np.einsum("qk,mkd->mqd", bary, p)

    def locate(self, points):
        """Triangle index and barycentric coordinates for each point.

        Points on void cells or outside the box give index -1.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ix = np.clip(np.searchsorted(self.xgrid, pts[:, 0], side="right") - 1,
                     0, len(self.xgrid) - 2)
        iy = np.clip(np.searchsorted(self.ygrid, pts[:, 1], side="right") - 1,
                     0, len(self.ygrid) - 2)
        x0, x1 = self.xgrid[ix], self.xgrid[ix + 1]
        y0, y1 = self.ygrid[iy], self.ygrid[iy + 1]
        u = (pts[:, 0] - x0) / (x1 - x0)
        v = (pts[:, 1] - y0) / (y1 - y0)
        lower = u >= v  # below the (x0,y0)-(x1,y1) diagonal
        tri = np.where(lower, self.cell_tris[ix, iy, 0], self.cell_tris[ix, iy, 1])
        # lower triangle (p00, p10, p11), upper triangle (p00, p11, p01)
        bary = np.where(lower[:, None],
                        np.column_stack([1 - u, u - v, v]),
                        np.column_stack([1 - v, u, v - u]))
        outside = ((pts[:, 0] < self.xgrid[0]) | (pts[:, 0] > self.xgrid[-1])
                   | (pts[:, 1] < self.ygrid[0]) | (pts[:, 1] > self.ygrid[-1]))
        tri = np.where(outside, -1, tri)
        return tri, bary

    def interpolate(self, values, points):
        tri, bary = self.locate(points)
        if np.any(tri < 0):
            raise GeometryError("interpolation point outside the meshed domain")
        return np.einsum("pk,pk->p", bary, np.asarray(values)[self.triangles[tri]])

    def write_text(self, path, node_values=None, value_names=()):
        """Plain-text export: node, triangle and boundary-edge tables."""
        with open(path, "w") as fh:
            names = " ".join(value_names)
            fh.write(f"# nodes {self.n_nodes}: index x y {names}\n".rstrip() + "\n")
            for k, (x, y) in enumerate(self.nodes):
                extra = ""
                if node_values is not None:
                    extra = " " + " ".join(f"{v:.16e}" for v in np.atleast_1d(node_values[k]))
                fh.write(f"{k} {x:.16e} {y:.16e}{extra}\n")
            fh.write(f"# triangles {self.n_triangles}: index n1 n2 n3 region\n")
            for k, (t, r) in enumerate(zip(self.triangles, self.tri_region)):
                fh.write(f"{k} {t[0]} {t[1]} {t[2]} {self.region_labels[r]}\n")
            fh.write(f"# edges {len(self.boundary_edges)}: n1 n2 tag\n")
            for (a, b), tag in zip(self.boundary_edges, self.edge_tags):
                fh.write(f"{a} {b} {tag}\n")


def generate_structured_mesh(geometry: GeometrySpec, nx: int, ny: int) -> Mesh:
    """Mesh ``geometry`` on a tensor grid with roughly ``nx * ny`` cells.

    Region boundaries and alignment coordinates are always grid lines; the
    intervals between them are split uniformly so that no cell is wider
    than ``width / nx`` (resp. taller than ``height / ny``). Each cell is
    cut along its rising diagonal into two triangles.
    """
    if nx < 1 or ny < 1:
        raise GeometryError("nx and ny must be at least 1")
    (bx0, bx1), (by0, by1) = geometry.bbox
    xs = _grid_lines([e for r in geometry.regions for e in r.x] + list(geometry.align_x),
                     bx0, bx1, nx)
    ys = _grid_lines([e for r in geometry.regions for e in r.y] + list(geometry.align_y),
                     by0, by1, ny)
    ncx, ncy = len(xs) - 1, len(ys) - 1

    labels = list(dict.fromkeys(r.label for r in geometry.regions if not r.void))
    label_id = {lab: k for k, lab in enumerate(labels)}
    void_labels = list(dict.fromkeys(r.label for r in geometry.regions if r.void))
    # region id per cell (void regions get negative ids -1-k)
    cell_region = np.full((ncx, ncy), -10**9, dtype=int)
    xc = 0.5 * (xs[:-1] + xs[1:])
    yc = 0.5 * (ys[:-1] + ys[1:])
    for r in geometry.regions:
        mx = (xc > r.x[0]) & (xc < r.x[1])
        my = (yc > r.y[0]) & (yc < r.y[1])
        rid = -1 - void_labels.index(r.label) if r.void else label_id[r.label]
        cell_region[np.ix_(mx, my)] = rid
    if np.any(cell_region == -10**9):
        raise GeometryError("grid cell not covered by any region")

    nid = lambda i, j: i * (ncy + 1) + j  # noqa: E731
    I, J = np.meshgrid(np.arange(ncx), np.arange(ncy), indexing="ij")
    p00, p10 = nid(I, J), nid(I + 1, J)
    p11, p01 = nid(I + 1, J + 1), nid(I, J + 1)
    lower = np.stack([p00, p10, p11], axis=-1)
    upper = np.stack([p00, p11, p01], axis=-1)
    tris_all = np.stack([lower, upper], axis=2)  # (ncx, ncy, 2, 3)
    solid = cell_region >= 0

    tris = tris_all[solid].reshape(-1, 3)
    tri_region = np.repeat(cell_region[solid], 2)
    cell_tris = np.full((ncx, ncy, 2), -1, dtype=int)
    cell_tris[solid] = np.arange(2 * solid.sum()).reshape(-1, 2)

    X, Y = np.meshgrid(xs, ys, indexing="ij")
    all_nodes = np.column_stack([X.ravel(), Y.ravel()])
    used = np.unique(tris)
    renum = np.full(len(all_nodes), -1, dtype=int)
    renum[used] = np.arange(len(used))
    nodes = all_nodes[used]
    tris = renum[tris]

    # boundary edges: edges owned by exactly one triangle
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, inv, cnt = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    bmask = cnt[inv] == 1
    bedges = e[bmask]  # keep orientation of owning triangle (ccw)
    btri = np.tile(np.arange(len(tris)), 3)[bmask]

    tol_x = 1e-12 * (bx1 - bx0)
    tol_y = 1e-12 * (by1 - by0)
    tags = []
    for (a, b), t in zip(bedges, btri):
        pa, pb = nodes[a], nodes[b]
        side = None
        if abs(pa[0] - bx0) < tol_x and abs(pb[0] - bx0) < tol_x:
            side = "left"
        elif abs(pa[0] - bx1) < tol_x and abs(pb[0] - bx1) < tol_x:
            side = "right"
        elif abs(pa[1] - by0) < tol_y and abs(pb[1] - by0) < tol_y:
            side = "bottom"
        elif abs(pa[1] - by1) < tol_y and abs(pb[1] - by1) < tol_y:
            side = "top"
        if side is not None:
            tags.append(geometry.boundary_tags.get(side, side))
            continue
        # interior edge facing a void region: probe just outside the edge
        mid = 0.5 * (pa + pb)
        d = pb - pa
        outward = np.array([d[1], -d[0]]) / np.hypot(*d)
        probe = mid + outward * 1e-6 * np.hypot(*d)
        hit = [r.label for r in geometry.regions if r.void and r.contains(*probe)]
        tags.append(hit[0] if hit else "interface")

    return Mesh(
        symmetry=geometry.symmetry,
        depth=geometry.depth if geometry.symmetry == "cartesian" else 1.0,
        nodes=nodes,
        triangles=tris,
        tri_region=tri_region,
        region_labels=tuple(labels),
        boundary_edges=bedges,
        edge_tags=tuple(tags),
        xgrid=xs,
        ygrid=ys,
        cell_tris=cell_tris,
    )


def rectangle(width, height, label="domain", symmetry="cartesian", depth=1.0,
              origin=(0.0, 0.0), **kwargs):
    """Single-region geometry; convenience for tests and small cases."""
    x0, y0 = origin
    reg = Region(label, (x0, x0 + width), (y0, y0 + height))
    return GeometrySpec(symmetry=symmetry, regions=(reg,), depth=depth, **kwargs)
