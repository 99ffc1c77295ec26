"""Exception hierarchy shared by all gridwatch modules.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON without string-matching messages.
"""


class GridwatchError(Exception):
    """Base class for all errors raised by this package."""

    code = "ERROR"


class ValidationError(GridwatchError):
    """Input fails a schema or precondition check."""

    code = "VALIDATION_ERROR"


class ParseError(ValidationError):
    """A configuration or data file is malformed."""

    code = "PARSE_ERROR"


class InvariantViolation(ValidationError):
    """A loaded object violates one of its declared invariants."""

    code = "INVARIANT_VIOLATION"


class RangeTooSmall(ValidationError):
    """Smallest sensor range cannot guarantee per-block coverage for the chosen block size."""

    code = "RANGE_TOO_SMALL"


class DimensionMismatch(ValidationError):
    """Terrain grid shape disagrees with the computed block grid."""

    code = "DIMENSION_MISMATCH"


class DegenerateDetection(GridwatchError):
    """Mean detection probability of 1 makes the redundancy formula singular."""

    code = "DEGENERATE_DETECTION"


class InfeasibleCoverage(GridwatchError):
    """Some in-area blocks cannot be covered by any (sensor, site) pair."""

    code = "INFEASIBLE_COVERAGE"

    def __init__(self, uncovered, message=None):
        self.uncovered = tuple(uncovered)
        if message is None:
            shown = ", ".join(str(z) for z in self.uncovered[:10])
            more = "" if len(self.uncovered) <= 10 else f" (+{len(self.uncovered) - 10} more)"
            message = f"{len(self.uncovered)} block(s) uncovered by every candidate: {shown}{more}"
        super().__init__(message)


class Infeasible(GridwatchError):
    """A placement instance admits no feasible assignment."""

    code = "INFEASIBLE"


class TooLarge(GridwatchError):
    """Instance exceeds the size limit of the exhaustive oracle solver."""

    code = "TOO_LARGE"


class VolumeAboveTopTier(GridwatchError):
    """Yearly data volume exceeds the top ingest tier and no overflow rate is configured."""

    code = "VOLUME_ABOVE_TOP_TIER"
