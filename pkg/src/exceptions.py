class GrainModelError(Exception):
    pass


class MeshParseError(GrainModelError, ValueError):
    pass


class MeshValidationError(GrainModelError, ValueError):
    pass


class NonConformalMeshError(GrainModelError):
    pass


class DegenerateBoundaryError(GrainModelError):
    pass


class InfeasibleGeometryError(GrainModelError, ValueError):
    pass


class PrecisionBoundsError(GrainModelError, ValueError):
    pass


class FactorizationError(GrainModelError):
    pass


class ResidualDriftError(GrainModelError):
    pass


class ChainAbortedError(GrainModelError):
    def __init__(self, message: str, dump_path=None):
        super().__init__(message)
        self.dump_path = dump_path


class ConfigError(GrainModelError):
    pass


class TraceIntegrityError(GrainModelError):
    pass
