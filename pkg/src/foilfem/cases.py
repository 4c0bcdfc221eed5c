"""Ready-made problem setups: stand-alone winding, pot inductor, pot transformer."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .circuit import StrandedWindingSpec, reference_transformer_netlist
from .fem2d import DEFAULT_DEGREE, Material, MaterialMap
from .foilwinding import FoilWindingSpec, VoltageBasis
from .mesh import SIDES, GeometrySpec, Region, generate_structured_mesh
from .solver import assemble_system, solve_frequency

SIGMA_CU = 5.7e7


def compose(bbox, shapes, background="air", symmetry="cartesian", depth=1.0,
            boundary_tags=None):
    """Tile ``bbox`` with rectangles; later shapes override earlier ones.

    ``shapes`` holds ``(label, (x0, x1), (y0, y1))`` or
    ``(label, xs, ys, void)`` tuples. Uncovered cells get ``background``.
    """
    (bx0, bx1), (by0, by1) = bbox
    xs = sorted({bx0, bx1, *(v for s in shapes for v in s[1])})
    ys = sorted({by0, by1, *(v for s in shapes for v in s[2])})
    regions = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        for y0, y1 in zip(ys[:-1], ys[1:]):
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            label, void = background, False
            for s in shapes:
                if s[1][0] <= cx <= s[1][1] and s[2][0] <= cy <= s[2][1]:
                    label = s[0]
                    void = bool(s[3]) if len(s) > 3 else False
            regions.append(Region(label, (x0, x1), (y0, y1), void))
    return GeometrySpec(symmetry=symmetry, regions=tuple(_merge_cells(regions)), depth=depth,
                        boundary_tags=dict(boundary_tags or {}))


def _merge_cells(cells):
    """Join same-label rectangles that share a full edge until none do."""
    cells = list(cells)
    merged = True
    while merged:
        merged = False
        for i, a in enumerate(cells):
            for j in range(i + 1, len(cells)):
                b = cells[j]
                if (a.label, a.void) != (b.label, b.void):
                    continue
                if a.x == b.x and (a.y[1] == b.y[0] or b.y[1] == a.y[0]):
                    new = Region(a.label, a.x, (min(a.y[0], b.y[0]), max(a.y[1], b.y[1])), a.void)
                elif a.y == b.y and (a.x[1] == b.x[0] or b.x[1] == a.x[0]):
                    new = Region(a.label, (min(a.x[0], b.x[0]), max(a.x[1], b.x[1])), a.y, a.void)
                else:
                    continue
                cells[i] = new
                del cells[j]
                merged = True
                break
            if merged:
                break
    return cells


@dataclass(frozen=True)
class FoilCase:
    """A field problem with one foil winding driven by an imposed current."""

    name: str
    geometry: GeometrySpec
    materials: dict
    foil: FoilWindingSpec
    dirichlet: tuple = ()
    frequency: float = 0.0
    current: float = 1.0
    base_mesh: tuple = (8, 8)  # (nx, ny) at refinement level 0
    strands: tuple = field(default_factory=tuple)

    @property
    def omega(self):
        return 2.0 * np.pi * self.frequency

    def level(self, k):
        return self.base_mesh[0] * 2 ** k, self.base_mesh[1] * 2 ** k

    def basis(self, kind, n):
        return VoltageBasis(kind, n, self.foil.alpha)

    def mesh(self, nx, ny, basis=None, geometry=None):
        geo = geometry or self.geometry
        if basis is not None and len(basis.breakpoints):
            key = "align_x" if self.foil.alpha_axis == 0 else "align_y"
            geo = replace(geo, **{key: tuple(getattr(geo, key)) + tuple(basis.breakpoints)})
        return generate_structured_mesh(geo, nx, ny)

    def system(self, basis, nx, ny, aligned=False, degree=DEFAULT_DEGREE, coupling_degree=None):
        """Homogenized system. With ``aligned`` the FE mesh gets grid lines at
        the hat breakpoints, so X and G integrands are smooth per element."""
        mesh = self.mesh(nx, ny, basis if aligned else None)
        return assemble_system(mesh, MaterialMap(self.materials), foils=[(self.foil, basis)],
                               strands=self.strands, dirichlet_tags=self.dirichlet,
                               degree=degree, coupling_degree=coupling_degree)

    def solve(self, basis, nx, ny, aligned=False, degree=DEFAULT_DEGREE, coupling_degree=None):
        sys_ = self.system(basis, nx, ny, aligned, degree, coupling_degree)
        st = solve_frequency(sys_, self.omega, drive={self.foil.region: {"current": self.current}})
        return sys_, st


WALLS = {s: "wall" for s in SIDES}


def standalone_case(turns=100, width=2e-3, height=4e-3, depth=0.5, fill_factor=0.9,
                    sigma=SIGMA_CU, frequency=50e3, base_mesh=(4, 8)):
    """Cartesian foil winding enclosed by flux walls on all four sides.

    Foils are stacked along x; their tips point along y.
    """
    geo = GeometrySpec("cartesian", (Region("winding", (0.0, width), (0.0, height)),),
                       depth=depth, boundary_tags=WALLS)
    foil = FoilWindingSpec.from_region(geo.region("winding"), "cartesian", alpha_axis=0,
                                       turns=turns, fill_factor=fill_factor, sigma=sigma,
                                       depth=depth)
    return FoilCase(f"standalone_N{turns}", geo, {}, foil, ("wall",), frequency,
                    base_mesh=base_mesh)


def scaled_standalone_case(turns=20, frequency=50e3, **kw):
    """Stand-alone winding with fewer turns and the same foil pitch.

    Keeping pitch, fill factor, height and frequency fixed preserves the
    skin-depth ratios to the conductor width and to the height.
    """
    pitch = 2e-3 / 100
    return standalone_case(turns=turns, width=turns * pitch, frequency=frequency, **kw)


def pot_inductor_case(turns=200, frequency=10e3, r_post=5e-3, winding_r=10e-3,
                      height=30e-3, gap=(14e-3, 16e-3), fill_factor=1.0, sigma=SIGMA_CU,
                      base_mesh=(3, 6)):
    """Interior of an ideal (mu -> inf) pot core with a disk-type winding.

    The winding fills the window between centre post and outer wall; the
    magnetic circuit closes through an air gap in the centre post. The
    yoke is void, so its surfaces carry the natural boundary condition.
    Only the symmetry axis inside the gap is a Dirichlet boundary.
    """
    r_out = r_post + winding_r
    shapes = [
        ("yoke", (0.0, r_post), (0.0, gap[0]), True),
        ("yoke", (0.0, r_post), (gap[1], height), True),
        ("gap", (0.0, r_post), gap),
        ("winding", (r_post, r_out), (0.0, height)),
    ]
    geo = compose(((0.0, r_out), (0.0, height)), shapes, symmetry="axisymmetric",
                  boundary_tags={"left": "axis"})
    win = geo.region("winding")
    foil = FoilWindingSpec.from_region(win, "disk", turns=turns, fill_factor=fill_factor,
                                       sigma=sigma)
    mats = {"gap": Material.isotropic(1.0)}
    return FoilCase(f"pot_inductor_N{turns}", geo, mats, foil, ("axis",), frequency,
                    base_mesh=base_mesh)


@dataclass(frozen=True)
class TransformerCase:
    geometry: GeometrySpec
    materials: dict
    primary: FoilWindingSpec
    secondary: StrandedWindingSpec
    dirichlet: tuple
    base_mesh: tuple

    def netlist(self, **kw):
        return reference_transformer_netlist(primary=self.primary.region,
                                             secondary=self.secondary.region, **kw)

    def system(self, basis_kind="legendre", n=4, refine=1, degree=DEFAULT_DEGREE):
        nx, ny = self.base_mesh[0] * refine, self.base_mesh[1] * refine
        mesh = generate_structured_mesh(self.geometry, nx, ny)
        basis = VoltageBasis(basis_kind, n, self.primary.alpha)
        return assemble_system(mesh, MaterialMap(self.materials),
                               foils=[(self.primary, basis)], strands=[self.secondary],
                               dirichlet_tags=self.dirichlet, degree=degree)


def pot_transformer_case(mu_r_yoke=1000.0, primary_turns=100, secondary_turns=500,
                         ff_primary=0.8, ff_secondary=0.8, sigma=SIGMA_CU,
                         dims=None, base_mesh=(30, 40)):
    """Axisymmetric pot transformer: tube-type foil primary inside, stranded
    secondary outside, ferrite yoke, surrounding air with a far flux wall.

    ``dims`` overrides the default dimensions (metres): ``post``, ``window``
    (outer radius of the window), ``wall`` (outer yoke radius), ``plate``
    (plate thickness), ``window_h``, ``primary`` and ``secondary`` radial
    intervals, ``coil_z`` axial interval, ``air`` margin.
    """
    d = dict(post=6e-3, window=16e-3, wall=20e-3, plate=4e-3, window_h=20e-3,
             primary=(7e-3, 10e-3), secondary=(11e-3, 15e-3), coil_margin=2e-3, air=8e-3)
    d.update(dims or {})
    z_top = 2 * d["plate"] + d["window_h"]
    z_w = (d["plate"], d["plate"] + d["window_h"])
    coil_z = (z_w[0] + d["coil_margin"], z_w[1] - d["coil_margin"])
    shapes = [
        ("yoke", (0.0, d["wall"]), (0.0, z_top)),
        ("air", (d["post"], d["window"]), z_w),
        ("primary", d["primary"], coil_z),
        ("secondary", d["secondary"], coil_z),
    ]
    bbox = ((0.0, d["wall"] + d["air"]), (-d["air"], z_top + d["air"]))
    geo = compose(bbox, shapes, symmetry="axisymmetric",
                  boundary_tags={"left": "axis", "right": "outer", "top": "outer",
                                 "bottom": "outer"})
    primary = FoilWindingSpec.from_region(geo.region("primary"), "tube", turns=primary_turns,
                                          fill_factor=ff_primary, sigma=sigma)
    secondary = StrandedWindingSpec("secondary", secondary_turns, ff_secondary, sigma)
    mats = {"air": Material.isotropic(1.0), "yoke": Material.isotropic(mu_r_yoke),
            "secondary": Material.isotropic(1.0)}
    return TransformerCase(geo, mats, primary, secondary, ("axis", "outer"), base_mesh)
