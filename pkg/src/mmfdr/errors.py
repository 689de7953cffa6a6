"""Exception types shared across the package."""


class MMFDRError(Exception):
    """Base class for all package errors."""


class ConfigError(MMFDRError):
    """Invalid scenario or experiment parameters."""


class NotPSDError(MMFDRError):
    """A matrix that must be positive semidefinite is not."""


class SingularChannelError(MMFDRError):
    """Effective channel matrix is rank deficient or too ill-conditioned for ZF."""


class ModeError(MMFDRError):
    """Operation called outside its validity mode (e.g. requires N_S = N_D = 1)."""


class ConvergenceError(MMFDRError):
    """Iterative routine failed to converge within its iteration budget."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
