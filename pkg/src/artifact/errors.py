"""Exception types shared across the solver modules."""


class SolverError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SolverError):
    """LP arrays disagree on problem dimensions or index ranges."""


class NumericalBreakdown(SolverError):
    """Simplex pivoting stalled: no pivot above the stability threshold."""


class InvalidColumn(SolverError):
    """A column violates the structural rules of its kind."""


class PartTooLarge(SolverError):
    """A body part has too many key-points for exhaustive pricing."""


class CandidateSetTooLarge(SolverError):
    """A centroid candidate set exceeds the exact search budget."""


class InstanceTooLarge(SolverError):
    """Instance exceeds the hard size cap of a brute-force oracle."""


class EmptyMatrix(SolverError):
    """Assignment requested on a cost matrix with no rows or no columns."""


class ParseError(SolverError):
    """Instance or report file is not syntactically valid."""


class ValidationError(SolverError):
    """File parsed but failed semantic validation."""
