"""Exception types shared across the package."""


class BeattycorrError(Exception):
    """Base class for package-specific failures."""


class FieldMismatch(BeattycorrError, ValueError):
    """Operands belong to different number fields."""


class FieldClosure(BeattycorrError, ValueError):
    """A required quotient or element is not representable in the field."""


class IndependenceViolation(BeattycorrError, RuntimeError):
    """Interval refinement hit the precision ceiling while straddling an
    integer, or a numeric relation was found among basis elements.  Either
    way the asserted Q-linear independence of the basis is suspect."""


class ResourceLimit(BeattycorrError, RuntimeError):
    """A computation would exceed the configured memory or size budget."""


class FullyRationalPhase(BeattycorrError, ValueError):
    """The Bohr set phase is rational; the purely periodic path applies."""


class VolumeUnsupported(BeattycorrError, RuntimeError):
    """Exact volume is unavailable (irrational polytope data)."""


class UnsupportedRegion(BeattycorrError, ValueError):
    """The operation needs box-decomposable region pieces."""


class RationalRatio(BeattycorrError, ValueError):
    """alpha2/alpha1 is rational; use the rational-pair partition."""


class IrrationalRatio(BeattycorrError, ValueError):
    """alpha1/alpha2 is irrational; the rational-case predictor does not apply."""


class VanishingFunction(BeattycorrError, ValueError):
    """The multiplicative function vanishes somewhere it must not."""


class DependentPhases(BeattycorrError, ValueError):
    """1, alpha_1, ..., alpha_k are linearly dependent over Q."""


class NoValidW(BeattycorrError, ValueError):
    """The supplied positive vector w fails an orthogonality/shape condition."""


class WIsRequired(BeattycorrError, ValueError):
    """The relation lattice is nontrivial and no w hint was supplied."""


class EmptyBohrSet(BeattycorrError, RuntimeError):
    """No member of the Bohr set was found below the search bound."""


class ConfigError(BeattycorrError, ValueError):
    """A configuration file failed to parse or validate."""
