"""Run configurations: YAML documents parsed into validated dataclasses.

Units are SI throughout (m, S/m, Hz, s, Ohm, F). A config has exactly one
``analysis`` block whose ``type`` is ``frequency``, ``transient`` or
``study``. See ``configs/`` for complete examples.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .cases import FoilCase, compose
from .circuit import Netlist, StrandedWindingSpec, Waveform
from .errors import ConfigurationError, FoilFemError
from .fem2d import MU0, Material, MaterialMap
from .foilwinding import ORIENTATIONS, FoilWindingSpec, VoltageBasis
from .mesh import SIDES, generate_structured_mesh
from .oracle import STUDY_KINDS

CONFIG_DIR = Path(__file__).parent / "configs"


class ConfigError(ConfigurationError):
    """Validation failure tied to one field of the document."""

    def __init__(self, where, msg):
        super().__init__(f"config field '{where}': {msg}")
        self.where = where


def _get(d, key, where, kind=None, default=...):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected a mapping")
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}.{key}".lstrip("."), "missing")
        return default
    v = d[key]
    if kind is float:
        return _number(v, f"{where}.{key}".lstrip("."))
    if kind is int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{where}.{key}".lstrip("."), f"expected an integer, got {v!r}")
    return v


def _number(v, where):
    # PyYAML follows YAML 1.1, which reads 5.7e7 (no dot before e, no sign) as a string
    if isinstance(v, bool):
        raise ConfigError(where, f"expected a number, got {v!r}")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected a number, got {v!r}") from None


def _pair(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(where, f"expected [lo, hi], got {v!r}")
    lo, hi = _number(v[0], where), _number(v[1], where)
    if not hi > lo:
        raise ConfigError(where, f"needs lo < hi, got {v!r}")
    return lo, hi


def _positive(v, where, allow_zero=False):
    if not (v > 0 or (allow_zero and v == 0)):
        raise ConfigError(where, f"must be {'non-negative' if allow_zero else 'positive'}, got {v}")
    return v


@dataclass(frozen=True)
class FoilConfig:
    region: str
    orientation: str
    turns: int
    fill_factor: float
    sigma: float
    alpha_axis: int = 0
    mu_r_ins: float = 1.0
    mu_r_foil: float = 1.0

    @classmethod
    def parse(cls, d, where):
        fc = cls(
            region=str(_get(d, "region", where)),
            orientation=str(_get(d, "orientation", where)),
            turns=_get(d, "turns", where, int),
            fill_factor=_get(d, "fill_factor", where, float),
            sigma=_get(d, "sigma", where, float),
            alpha_axis=_get(d, "alpha_axis", where, int, 0),
            mu_r_ins=_get(d, "mu_r_ins", where, float, 1.0),
            mu_r_foil=_get(d, "mu_r_foil", where, float, 1.0),
        )
        if fc.orientation not in ORIENTATIONS:
            raise ConfigError(f"{where}.orientation", f"must be one of {ORIENTATIONS}")
        if fc.turns < 1:
            raise ConfigError(f"{where}.turns", "must be a positive integer")
        if not 0.0 < fc.fill_factor <= 1.0:
            raise ConfigError(f"{where}.fill_factor", f"must lie in (0, 1], got {fc.fill_factor}")
        _positive(fc.sigma, f"{where}.sigma", allow_zero=True)
        if fc.alpha_axis not in (0, 1):
            raise ConfigError(f"{where}.alpha_axis", "must be 0 (x) or 1 (y)")
        _positive(fc.mu_r_ins, f"{where}.mu_r_ins")
        _positive(fc.mu_r_foil, f"{where}.mu_r_foil")
        return fc


@dataclass(frozen=True)
class StrandConfig:
    region: str
    turns: int
    fill_factor: float
    sigma: float

    @classmethod
    def parse(cls, d, where):
        sc = cls(str(_get(d, "region", where)), _get(d, "turns", where, int),
                 _get(d, "fill_factor", where, float), _get(d, "sigma", where, float))
        if sc.turns < 1:
            raise ConfigError(f"{where}.turns", "must be a positive integer")
        if not 0.0 < sc.fill_factor <= 1.0:
            raise ConfigError(f"{where}.fill_factor", f"must lie in (0, 1], got {sc.fill_factor}")
        _positive(sc.sigma, f"{where}.sigma")
        return sc


@dataclass(frozen=True)
class BasisConfig:
    kind: str = "legendre"
    n: int = 4
    aligned: bool = False  # add hat breakpoints as mesh lines

    @classmethod
    def parse(cls, d, where="basis"):
        bc = cls(str(_get(d, "kind", where, default="legendre")),
                 _get(d, "n", where, int, 4), bool(_get(d, "aligned", where, default=False)))
        if bc.kind not in ("legendre", "hat"):
            raise ConfigError(f"{where}.kind", "must be 'legendre' or 'hat'")
        if bc.n < 1:
            raise ConfigError(f"{where}.n", "must be at least 1")
        return bc


@dataclass(frozen=True)
class FrequencyAnalysis:
    frequency: float
    drive: dict = field(default_factory=dict)
    constraint_samples: int = 10
    field_dump: bool = False


@dataclass(frozen=True)
class TransientAnalysis:
    t0: float
    t_end: float
    dt: float


@dataclass(frozen=True)
class StudyAnalysis:
    frequency: float
    levels: tuple
    kinds: tuple
    counts: dict
    reference: dict
    workers: int = 1
    current: float = 1.0


def _parse_analysis(d):
    where = "analysis"
    kind = _get(d, "type", where)
    if kind == "frequency":
        f = _positive(_get(d, "frequency", where, float), "analysis.frequency", allow_zero=True)
        drive = _get(d, "drive", where, default={}) or {}
        for port, spec in drive.items():
            if not (isinstance(spec, dict) and len(spec) == 1
                    and next(iter(spec)) in ("current", "voltage")):
                raise ConfigError(f"analysis.drive.{port}",
                                  "must be {current: I} or {voltage: V}")
        return FrequencyAnalysis(f, drive, _get(d, "constraint_samples", where, int, 10),
                                 bool(_get(d, "field_dump", where, default=False)))
    if kind == "transient":
        a = TransientAnalysis(_get(d, "t0", where, float, 0.0), _get(d, "t_end", where, float),
                              _get(d, "dt", where, float))
        _positive(a.dt, "analysis.dt")
        if not a.t_end > a.t0:
            raise ConfigError("analysis.t_end", "must exceed t0")
        return a
    if kind == "study":
        f = _positive(_get(d, "frequency", where, float), "analysis.frequency")
        levels = tuple(_get(d, "levels", where))
        kinds = tuple(_get(d, "kinds", where))
        for k in kinds:
            if k not in STUDY_KINDS:
                raise ConfigError("analysis.kinds", f"unknown kind {k!r}; use {list(STUDY_KINDS)}")
        counts = _get(d, "counts", where)
        if not isinstance(counts, dict):
            counts = {k: list(counts) for k in kinds}
        for k in kinds:
            if k not in counts or not counts[k]:
                raise ConfigError(f"analysis.counts.{k}", "missing basis sizes")
        ref = _get(d, "reference", where)
        if _get(ref, "type", "analysis.reference") not in ("resolved", "self", "value"):
            raise ConfigError("analysis.reference.type", "must be resolved, self or value")
        workers = _get(d, "workers", where, int, 1)
        _positive(workers, "analysis.workers")
        return StudyAnalysis(f, levels, kinds, {k: list(v) for k, v in counts.items()}, ref,
                             workers, _get(d, "current", where, float, 1.0))
    raise ConfigError("analysis.type", f"must be frequency, transient or study, got {kind!r}")


@dataclass
class RunConfig:
    name: str
    geometry: object
    materials: MaterialMap
    foils: list
    strands: list
    basis: BasisConfig
    analysis: object
    mesh: tuple
    dirichlet: tuple = ()
    netlist: Netlist | None = None
    oracle: dict | None = None
    output_dir: str = "out"

    # ----------------------------------------------------------------
    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("<root>", "document must be a mapping")
        known = {"name", "geometry", "materials", "foils", "strands", "basis", "analysis",
                 "mesh", "dirichlet", "netlist", "oracle", "output_dir"}
        for key in d:
            if key not in known:
                raise ConfigError(str(key), "unknown top-level key")
        geometry = _parse_geometry(_get(d, "geometry", ""))
        labels = {r.label for r in geometry.regions if not r.void}
        materials = MaterialMap()
        for lab, m in (d.get("materials") or {}).items():
            materials[lab] = _parse_material(m, f"materials.{lab}")
        foils = [FoilConfig.parse(f, f"foils[{k}]") for k, f in enumerate(d.get("foils") or [])]
        strands = [StrandConfig.parse(s, f"strands[{k}]")
                   for k, s in enumerate(d.get("strands") or [])]
        for k, f in enumerate(foils):
            if f.region not in labels:
                raise ConfigError(f"foils[{k}].region", f"no region labelled {f.region!r}")
        for k, s in enumerate(strands):
            if s.region not in labels:
                raise ConfigError(f"strands[{k}].region", f"no region labelled {s.region!r}")
            if s.region not in materials:
                raise ConfigError(f"materials.{s.region}", "stranded region needs a material")
        winding = {f.region for f in foils}
        for lab in labels - winding:
            if lab not in materials:
                raise ConfigError(f"materials.{lab}", "missing material for region")
        mesh = _get(d, "mesh", "")
        nx, ny = _get(mesh, "nx", "mesh", int), _get(mesh, "ny", "mesh", int)
        _positive(nx, "mesh.nx")
        _positive(ny, "mesh.ny")
        analysis = _parse_analysis(_get(d, "analysis", ""))
        netlist = _parse_netlist(d["netlist"]) if d.get("netlist") else None
        if isinstance(analysis, TransientAnalysis) and netlist is None:
            raise ConfigError("netlist", "transient analysis needs a netlist")
        if isinstance(analysis, StudyAnalysis) and len(foils) != 1:
            raise ConfigError("foils", "a study needs exactly one foil winding")
        dirichlet = tuple(d.get("dirichlet") or ())
        tags = set(geometry.boundary_tags.values()) | set(SIDES)
        tags |= {r.label for r in geometry.regions if r.void} | {"interface"}
        for t in dirichlet:
            if t not in tags:
                raise ConfigError("dirichlet", f"unknown boundary tag {t!r}")
        oracle = d.get("oracle")
        if oracle is not None:
            _positive(_get(oracle, "nx", "oracle", int), "oracle.nx")
            _positive(_get(oracle, "ny", "oracle", int), "oracle.ny")
        return cls(name=str(d.get("name", "run")), geometry=geometry, materials=materials,
                   foils=foils, strands=strands,
                   basis=BasisConfig.parse(d.get("basis") or {}), analysis=analysis,
                   mesh=(nx, ny), dirichlet=dirichlet, netlist=netlist, oracle=oracle,
                   output_dir=str(d.get("output_dir", "out")))

    # ----------------------------------------------------------------
    def foil_specs(self):
        out = []
        for k, f in enumerate(self.foils):
            try:
                out.append(FoilWindingSpec.from_region(
                    self.geometry.region(f.region), f.orientation, alpha_axis=f.alpha_axis,
                    turns=f.turns, fill_factor=f.fill_factor, sigma=f.sigma,
                    mu_ins=f.mu_r_ins * MU0, mu_foil=f.mu_r_foil * MU0,
                    depth=self.geometry.depth))
            except FoilFemError as exc:
                raise ConfigError(f"foils[{k}]", str(exc)) from None
        return out

    def strand_specs(self):
        return [StrandedWindingSpec(s.region, s.turns, s.fill_factor, s.sigma)
                for s in self.strands]

    def bases(self, specs=None):
        specs = specs or self.foil_specs()
        return [VoltageBasis(self.basis.kind, self.basis.n, s.alpha) for s in specs]

    def build_mesh(self, specs=None, bases=None):
        geo = self.geometry
        if self.basis.aligned:
            specs = specs or self.foil_specs()
            bases = bases or self.bases(specs)
            ax, ay = list(geo.align_x), list(geo.align_y)
            for s, b in zip(specs, bases):
                (ax if s.alpha_axis == 0 else ay).extend(b.breakpoints)
            geo = replace(geo, align_x=tuple(ax), align_y=tuple(ay))
        return generate_structured_mesh(geo, *self.mesh)

    def foil_case(self, frequency, current=1.0):
        spec = self.foil_specs()[0]
        return FoilCase(self.name, self.geometry, dict(self.materials), spec,
                        tuple(self.dirichlet), frequency, current, tuple(self.mesh),
                        tuple(self.strand_specs()))


def _parse_geometry(d):
    where = "geometry"
    sym = _get(d, "symmetry", where, default="cartesian")
    if sym not in ("cartesian", "axisymmetric"):
        raise ConfigError("geometry.symmetry", "must be cartesian or axisymmetric")
    depth = _get(d, "depth", where, float, 1.0)
    _positive(depth, "geometry.depth")
    bbox = _get(d, "bbox", where)
    bx = _pair(_get(bbox, "x", "geometry.bbox"), "geometry.bbox.x")
    by = _pair(_get(bbox, "y", "geometry.bbox"), "geometry.bbox.y")
    shapes = []
    for k, s in enumerate(_get(d, "shapes", where, default=[]) or []):
        w = f"geometry.shapes[{k}]"
        shapes.append((str(_get(s, "label", w)), _pair(_get(s, "x", w), f"{w}.x"),
                       _pair(_get(s, "y", w), f"{w}.y"), bool(s.get("void", False))))
    tags = _get(d, "boundary_tags", where, default={}) or {}
    for side in tags:
        if side not in SIDES:
            raise ConfigError(f"geometry.boundary_tags.{side}", f"side must be one of {SIDES}")
    try:
        return compose((bx, by), shapes, background=str(_get(d, "background", where,
                                                             default="air")),
                       symmetry=sym, depth=depth, boundary_tags=tags)
    except FoilFemError as exc:
        raise ConfigError("geometry", str(exc)) from None


def _parse_material(m, where):
    sigma = _get(m, "sigma", where, float, 0.0)
    _positive(sigma, f"{where}.sigma", allow_zero=True)
    if "nu" in m:
        nu = _pair_any(m["nu"], f"{where}.nu")
        return Material(nu, sigma)
    mu_r = _get(m, "mu_r", where, float, 1.0)
    _positive(mu_r, f"{where}.mu_r")
    return Material.isotropic(mu_r, sigma)


def _pair_any(v, where):
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(where, f"expected two values, got {v!r}")
    out = (_number(v[0], where), _number(v[1], where))
    if min(out) <= 0:
        raise ConfigError(where, "reluctivities must be positive")
    return out


def _parse_netlist(items):
    net = Netlist()
    for k, e in enumerate(items):
        w = f"netlist[{k}]"
        kind = _get(e, "kind", w)
        wave = None
        if "waveform" in e:
            wd = e["waveform"]
            wave = Waveform(str(_get(wd, "kind", f"{w}.waveform", default="dc")),
                            _get(wd, "amplitude", f"{w}.waveform", float, 1.0),
                            _get(wd, "period", f"{w}.waveform", float, 1.0))
            if wave.kind not in ("dc", "square", "sine"):
                raise ConfigError(f"{w}.waveform.kind", "must be dc, square or sine")
            _positive(wave.period, f"{w}.waveform.period")
        value = _get(e, "value", w, float, 0.0)
        if kind in ("R", "C"):
            _positive(value, f"{w}.value")
        net.add(kind, str(_get(e, "name", w)), str(_get(e, "plus", w)),
                str(_get(e, "minus", w)), value, wave)
    return net


def resolve_path(name_or_path):
    """A file path, or the name of a bundled config (without suffix)."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = CONFIG_DIR / f"{name_or_path}.yaml"
    if bundled.exists():
        return bundled
    raise ConfigurationError(f"no config file or bundled config named {name_or_path!r}")


def load_config(name_or_path):
    path = resolve_path(name_or_path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" (line {mark.line + 1})" if mark is not None else ""
        raise ConfigurationError(f"{path}: invalid YAML{line}: {exc}") from None
    return RunConfig.from_dict(doc)


def bundled_configs():
    return sorted(p.stem for p in CONFIG_DIR.glob("*.yaml"))
