"""Exception hierarchy shared by every phest module."""


class PhestError(Exception):
    """Base class for all errors raised by phest."""


class PartitionError(PhestError, ValueError):
    """Invalid partition, domain mismatch or partition outside a family."""


class FamilyTooLargeError(PartitionError):
    """Enumeration or pairwise evaluation would exceed the configured cap."""


class SupportError(PhestError, ValueError):
    """A cell carries positive N-mass while its M-mass is zero."""


class ConfigError(PhestError, ValueError):
    """Invalid experiment, penalty or generator configuration."""


class PenaltyError(ConfigError):
    """Penalty coefficients below the admissible minimum, or weight mismatch."""


class QuadratureError(PhestError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance."""
