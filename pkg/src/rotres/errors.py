"""Exception types shared across the package."""


class RotresError(Exception):
    """Base class for all package-specific errors."""


class InvalidModeError(RotresError, ValueError):
    """A lattice mode was zero (or out of range) where a nonzero mode is required."""


class InvalidTriadError(RotresError, ValueError):
    """A triple (n, k, m) violates the convolution constraint k + m = n."""


class ContractViolationError(RotresError, ValueError):
    """An input field violates a declared precondition (e.g. not divergence-free)."""


class TruncationMismatchError(RotresError, ValueError):
    """Two fields (or a field and a triad table) have incompatible truncations."""


class ConfigError(RotresError, ValueError):
    """A configuration file or parameter set is invalid; the message names the key."""


class StabilityError(RotresError, RuntimeError):
    """A time step was rejected by the stability guard."""


class BlowupError(RotresError, RuntimeError):
    """Non-finite values appeared during time integration."""


class NumericalIdentityError(RotresError, RuntimeError):
    """A floating-point evaluation failed to reproduce an exact integer identity."""
