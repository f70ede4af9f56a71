class StrandError(Exception):
    exit_code = 1


class ArgumentError(StrandError, ValueError):
    exit_code = 2


class PlanarityError(ArgumentError):
    pass


class CompositionError(ArgumentError):
    pass


class ResourceError(StrandError):
    exit_code = 3


class InvariantError(StrandError):
    """Raised when a computed object violates a structural guarantee."""
    exit_code = 4


class CalibrationError(InvariantError):
    pass


class CertificationError(InvariantError):
    pass


class InconsistencyError(InvariantError):
    pass


class ClusteringError(InvariantError):
    pass
