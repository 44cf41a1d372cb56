"""Exception types shared across coverlab modules.

Each class maps to one failure mode a caller can act on; the CLI maps them
to distinct exit codes.
"""


class CoverlabError(Exception):
    """Base class for all coverlab errors."""


class InvalidElementError(CoverlabError):
    """A matrix is not a valid group element (wrong determinant, wrong entries)."""


class DomainError(CoverlabError):
    """A point violates an upper half-plane or fundamental-domain precondition."""


class CalibrationError(CoverlabError):
    """A pruning or truncation constant proved too small for the request."""


class NonTerminationError(CoverlabError):
    """An iterative reduction exceeded its iteration cap."""


class NotConnectedError(CoverlabError):
    """An operation needs a transitive (connected) cover and got a disconnected one."""


class BasisMismatchError(CoverlabError):
    """A character vector does not match the basis it is evaluated against."""


class NumericError(CoverlabError):
    """An iterative solver failed to converge; carries diagnostics in args."""


class MeshError(CoverlabError):
    """Mesh generation could not satisfy its quality or conformity contract."""


class AssemblyError(CoverlabError):
    """Operator assembly refused (incompatible mesh/cover/character data)."""


class InvalidBandError(CoverlabError):
    """A cusp band request falls outside the truncated region."""


class ConfigError(CoverlabError):
    """A run configuration is malformed or contains unknown keys."""
