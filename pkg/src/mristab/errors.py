"""Exception types shared across the package."""


class InvalidProfile(ValueError):
    """Profile parameters or samples violate the steady-state requirements."""


class WrongRegime(ValueError):
    """The requested quantity is not defined for this profile."""


class NumericFailure(RuntimeError):
    """A factorization, integration or root-find did not succeed."""


class IncompleteCount(RuntimeError):
    """Mode count stopped before a positivity certificate was found."""

    def __init__(self, msg, per_k):
        super().__init__(msg)
        self.per_k = list(per_k)


class ConfigError(ValueError):
    """Run configuration failed validation."""
