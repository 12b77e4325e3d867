"""Exception hierarchy shared by all modules."""


class RenyiDivError(Exception):
    """Base class for every error raised by this package."""


class DomainError(RenyiDivError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvalidKernelError(RenyiDivError, ValueError):
    """A kernel is non-finite on its support or fails normalization."""


class InvalidBandwidthError(RenyiDivError, ValueError):
    """Bandwidth outside the range supported by the mirror construction."""


class DimensionMismatchError(RenyiDivError, ValueError):
    pass


class OracleError(RenyiDivError, ArithmeticError):
    """A reference density produced non-finite values."""


class PathologicalDistributionError(RenyiDivError, RuntimeError):
    """Rejection sampling would accept (almost) nothing."""


class TrialError(RenyiDivError, RuntimeError):
    """A Monte Carlo trial failed; carries enough to replay it."""

    def __init__(self, message, n, trial, seed_key):
        super().__init__(f"{message} (n={n}, trial={trial}, seed_key={seed_key})")
        self.n = n
        self.trial = trial
        self.seed_key = seed_key
