"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration/validation
problems exit 2, size/budget cap violations exit 3, numerical failures
exit 4, and internal assertion failures exit 5.
"""


class SparselabError(Exception):
    """Base class for all package errors."""


class DimensionError(SparselabError, ValueError):
    """Shape or dimension mismatch between operands."""


class InputError(SparselabError, ValueError):
    """Invalid input values (non-finite entries, non-unit probes, ...)."""


class ParameterError(SparselabError, ValueError):
    """Parameter outside its documented range."""


class UnderdeterminedError(ParameterError):
    """Not enough usable data points to determine a fit."""


class SizeCapError(SparselabError):
    """A hard size/budget cap for an exact method was exceeded."""


class NumericalError(SparselabError):
    """A numerical routine failed to produce a trustworthy result."""


class DegenerateRubError(NumericalError):
    """Lower RUB constant is not positive; the recovery certificate
    cannot be evaluated."""


class ConfigError(SparselabError):
    """Bad command line / config file input."""
