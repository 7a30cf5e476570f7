"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error records.
"""


class QuadflowError(Exception):
    """Base class for all package errors."""

    code = "error"


class ConstraintViolation(QuadflowError):
    """A stored coefficient pair breaks a structural constraint."""

    code = "constraint-violation"


class DegenerateBasis(QuadflowError):
    """Gram-Schmidt pivot collapsed; the candidate set is linearly dependent."""

    code = "degenerate-basis"


class ExpansionResidual(QuadflowError):
    """A rotated harmonic failed to re-expand in its own degree block."""

    code = "expansion-residual"


class NotTangent(QuadflowError):
    """Polynomial field has a radial component on the sphere."""

    code = "not-tangent"


class DegreeOverflow(QuadflowError):
    """Requested harmonic degree cannot represent the field components."""

    code = "degree-overflow"


class OffSphere(QuadflowError):
    """Evaluation point is not on the unit sphere."""

    code = "off-sphere"


class BadAngles(QuadflowError):
    """Triangle angles must be positive and sum to pi."""

    code = "bad-angles"


class StepFailure(QuadflowError):
    """Adaptive integrator step size underflowed."""

    code = "step-failure"


class NoConvergence(QuadflowError):
    """Iterative settling failed to stabilize within its budget."""

    code = "no-convergence"


class UnsupportedManifold(QuadflowError):
    """Operation only ships with specific test-manifold instances."""

    code = "unsupported-manifold"


class NotOrthogonal(QuadflowError):
    """Matrix is not orthogonal within tolerance."""

    code = "not-orthogonal"


class UnclassifiedCommutator(QuadflowError):
    """A basis commutator failed to reduce to 0 or a signed basis element."""

    code = "unclassified-commutator"


class UsageError(QuadflowError):
    """Bad configuration or CLI input."""

    code = "usage-error"
