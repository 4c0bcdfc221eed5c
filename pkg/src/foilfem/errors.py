"""Exception hierarchy shared by all modules."""


class FoilFemError(Exception):
    """Base class for all errors raised by foilfem."""


class GeometryError(FoilFemError):
    pass


class MaterialError(FoilFemError):
    pass


class ConfigurationError(FoilFemError):
    pass


class AssemblyError(FoilFemError):
    pass


class DomainError(FoilFemError, ValueError):
    """An argument lies outside the domain of a function."""


class NetlistError(FoilFemError):
    pass


class SolverError(FoilFemError):
    pass
