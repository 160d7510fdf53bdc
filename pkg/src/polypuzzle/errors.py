"""Exception types shared across the package.

Every error carries a stable ``code`` string so CLI consumers and reports
can match on it without parsing messages.
"""

from __future__ import annotations


class PolypuzzleError(Exception):
    code = "ERROR"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class RootFindingError(PolypuzzleError):
    """Critical-point solver failed to converge; details carry residuals."""

    code = "ROOT_FINDING"


class VDisconnectedError(PolypuzzleError):
    """Requested level would split the outer equipotential domain.

    Raised when level_r is at or below the Green level of an escaping
    critical point and the caller did not opt into a disconnected outer
    domain.
    """

    code = "V_DISCONNECTED"


class NoBoundedCriticalError(PolypuzzleError):
    """Every critical point escapes; the filled set has no critical part."""

    code = "NO_BOUNDED_CRITICAL"


class InvalidSetupError(PolypuzzleError):
    """A downstream operation received a restriction whose validation failed."""

    code = "INVALID_SETUP"


class ResolutionExhaustedError(PolypuzzleError):
    """A component fell below raster scale while deepening the tree.

    ``resolved_depth`` is the greatest depth at which every component was
    fully resolved; ``partial_tree`` (when present) holds the tree truncated
    to that depth.
    """

    code = "RESOLUTION_EXHAUSTED"

    def __init__(self, message, resolved_depth, partial_tree=None, **details):
        super().__init__(message, **details)
        self.resolved_depth = resolved_depth
        self.partial_tree = partial_tree


class AmbiguousCellError(PolypuzzleError):
    """The queried point falls on a cell straddling a level set."""

    code = "AMBIGUOUS_CELL"


class OrbitEscapedError(PolypuzzleError):
    code = "ORBIT_ESCAPED"


class ConfidenceTooLowError(PolypuzzleError):
    code = "CONFIDENCE_TOO_LOW"


class PViolationError(PolypuzzleError):
    """The layered decomposition failed one of its structural properties."""

    code = "P_VIOLATION"


class InconclusiveError(PolypuzzleError):
    """The children census neither stabilized nor grew within its window."""

    code = "INCONCLUSIVE"


class DepthExhaustedError(PolypuzzleError):
    """A landing domain would live deeper than the computed tree."""

    code = "DEPTH_EXHAUSTED"


class StarStarDepthNotFoundError(PolypuzzleError):
    """No depth within range separates all non-accumulating critical pairs."""

    code = "NOT_FOUND"


class RasterInconsistencyError(PolypuzzleError):
    """Cross-checks on raster decorations disagreed; refine the grid."""

    code = "RASTER_INCONSISTENT"
