"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 2,
InfeasibleError -> 3, PreconditionError -> 4, ConvergenceError -> 5.
Plain ValueError/DimensionError signal caller bugs and are not mapped.
"""


class DimensionError(ValueError):
    """Shapes or dimensions of inputs are inconsistent."""


class ParameterError(ValueError):
    """A scalar parameter is outside its admissible range."""


class ConfigError(ValueError):
    """A run configuration file is malformed or incomplete."""


class InfeasibleError(ValueError):
    """Requested parameters violate a feasibility condition of a bound."""


class PreconditionError(ValueError):
    """A stated precondition of an operation does not hold."""


class ConvergenceError(RuntimeError):
    """An iterative method failed to converge within its budget."""
