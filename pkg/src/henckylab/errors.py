"""Exception taxonomy shared across the library."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


class NonPositiveDeterminant(DomainError):
    """det F <= 0 where a positive determinant is required."""


class NotPositiveDefinite(DomainError):
    """Symmetric matrix has an eigenvalue at or below the SPD floor."""


class OutsideDomain(DomainError):
    """Invariant point lies outside D(i1, i2) beyond tolerance."""


class TooCloseToGamma2(DomainError):
    """Eigenvalues too close to coincidence for the invariant-space formulas."""


class StencilLeftDomain(DomainError):
    """A finite-difference stencil point left GL+ (det <= 0)."""


class ConstraintConstructionFailed(RuntimeError):
    """Rejection sampling could not build a constraint-satisfying tuple."""


class InfeasibleState(RuntimeError):
    """Discrete field has infinite energy where a finite one is required."""


class NoFeasibleStart(RuntimeError):
    """No initial field with finite energy found within the blending budget."""


class InvalidDimensions(ValueError):
    """Mesh or matrix dimensions outside the supported range."""
