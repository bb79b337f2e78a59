"""
Errors raised by the conformal engine.

The management command maps them onto exit codes: input and validation
problems exit with 2, resource ceilings with 3.
"""


class ConformalError(Exception):
    pass


class InputError(ConformalError, ValueError):
    pass


class StructuralError(ConformalError):
    """The system lacks a structural property the operation relies on."""


class UnsupportedError(ConformalError):
    pass


class InsufficientDataError(ConformalError):
    pass


class DomainError(ConformalError, ValueError):
    pass


class NeedsLongerPathError(ConformalError):
    pass


class ResourceError(ConformalError):
    """
    A computation would exceed a configured ceiling.
    ``estimate`` is the projected size, ``suggestion`` a parameter set that fits.
    """
    def __init__(self, message, estimate=None, suggestion=None):
        super(ResourceError, self).__init__(message)
        self.estimate = estimate
        self.suggestion = suggestion or {}


class BracketError(ConformalError):
    def __init__(self, message, pressures=None):
        super(BracketError, self).__init__(message)
        self.pressures = pressures or {}


class NotApplicableError(ConformalError):
    """The check has nothing to test for this system."""
