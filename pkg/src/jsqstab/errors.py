"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """A numeric argument or distribution parameter is out of range."""


class DomainError(ValueError):
    """A governing sequence violates its positivity requirement."""


class ConfigurationError(ValueError):
    """A network or experiment configuration breaks its invariants."""


class WrongModelError(ValueError):
    """The requested criterion does not apply to the given model."""


class UndefinedSplitError(ValueError):
    """The opportunistic routing split does not exist for these parameters."""


class SolverError(RuntimeError):
    """The LP solver failed to converge or produced inconsistent output."""


class InconsistencyError(RuntimeError):
    """An internal invariant failed; indicates a bug rather than bad input."""
