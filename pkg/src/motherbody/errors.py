"""Exception types shared across the package."""


class MotherbodyError(Exception):
    """Base class for all package-specific failures."""


class DomainError(MotherbodyError):
    """Input outside the parameter or spatial domain of an operation."""


class DegenerateDiscriminant(MotherbodyError):
    """Branch points coincide (or nearly so) and the caller did not opt in."""


class ContinuationAmbiguous(MotherbodyError):
    """Root tracking could not separate sheets even at the minimum step size."""


class QuadratureNotConverged(MotherbodyError):
    """Two quadrature refinement levels disagree beyond the requested tolerance."""


class NoSignChange(MotherbodyError):
    """A bracketing root search found no sign change on the given interval."""


class TrajectoryEscaped(MotherbodyError):
    """A traced level-set trajectory left the search region without reaching its target."""


class UnknownArm(MotherbodyError):
    """A measure arm identifier does not name any arm of the support."""


class NotInNEpsilon(MotherbodyError):
    """Degree n violates the distance condition required for the asymptotic formula."""


class PoleAtZ(MotherbodyError):
    """Evaluation point sits on a zero of a denominator (theta zero or branch cut)."""
