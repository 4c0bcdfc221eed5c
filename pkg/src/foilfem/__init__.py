"""2D eddy-current FE solver with a homogenized foil-winding model."""
from .errors import (AssemblyError, ConfigurationError, DomainError, FoilFemError,
                     GeometryError, MaterialError, NetlistError, SolverError)
from .fem2d import MU0, Material, MaterialMap
from .foilwinding import FoilWindingSpec, VoltageBasis
from .mesh import GeometrySpec, Region, generate_structured_mesh
from .solver import assemble_system, solve_frequency, solve_transient

__version__ = "0.1.0"

__all__ = [
    "AssemblyError", "ConfigurationError", "DomainError", "FoilFemError", "GeometryError",
    "MaterialError", "NetlistError", "SolverError", "MU0", "Material", "MaterialMap",
    "FoilWindingSpec", "VoltageBasis", "GeometrySpec", "Region", "generate_structured_mesh",
    "assemble_system", "solve_frequency", "solve_transient",
]
