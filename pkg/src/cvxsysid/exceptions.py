"""Exception types raised across the package."""


class CvxsysidError(Exception):
    """Base class for package-specific errors."""


class UnsupportedPotentialError(CvxsysidError, ValueError):
    """The requested operation needs an invertible gradient and the
    potential does not provide one (e.g. leaky ReLU with slope 0)."""


class RankDeficientGramError(CvxsysidError, RuntimeError):
    """The Gram matrix of stacked states is numerically singular.

    Carries the offending smallest eigenvalue in ``min_eigenvalue``.
    """

    def __init__(self, message, min_eigenvalue):
        super().__init__(message)
        self.min_eigenvalue = float(min_eigenvalue)


class InfeasibleBoundError(CvxsysidError, ValueError):
    """A theoretical bound is undefined for the given system, e.g. the
    stride bound when the dynamics are not contractive."""


class ConfigError(CvxsysidError, ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""
