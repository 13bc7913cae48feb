"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: configuration/parameter problems exit
with 2, numeric-limit problems with 3.
"""


class IsacError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(IsacError, ValueError):
    """An argument value is out of range or inconsistent."""


class DimensionError(IsacError, ValueError):
    """Array shapes do not line up."""


class StateError(IsacError, RuntimeError):
    """An object is missing state required by the operation."""


class ConfigurationError(IsacError, ValueError):
    """A waveform/scenario configuration is invalid for the requested operation."""


class ModelViolationError(IsacError, ValueError):
    """Inputs violate the validity region of the chosen signal model."""


class NumericLimitError(IsacError, ArithmeticError):
    """A refinement was pushed past floating-point resolution."""


class DegenerateInputError(IsacError, ValueError):
    """Input carries no usable signal (e.g. an all-zero reference group)."""


class InsufficientGroupsError(IsacError, ValueError):
    """Too few sample groups for the requested estimate."""
