"""Exception hierarchy.

The CLI maps each class to its own exit code, so callers can tell a bad
config apart from a physically invalid request or a numerical failure.
"""


class LatticeLightError(Exception):
    """Base class for all package errors."""


class ConfigError(LatticeLightError, ValueError):
    """Invalid or inconsistent input parameters."""


class ValidityError(LatticeLightError):
    """The requested physical state lies outside the model's validity range.

    Examples: filling beyond one fermion per site, Bogoliubov depletion above
    the allowed fraction, a dynamically unstable quasiparticle spectrum, or a
    thermometry run with no temperature signal.
    """


class ConvergenceError(LatticeLightError):
    """A numerical procedure failed to reach its tolerance."""
