"""Exception types shared across the toolkit.

The CLI maps these onto exit codes (see tempokit.cli), so library code
should raise the most specific class that applies.
"""


class TempokitError(Exception):
    """Base class for all toolkit errors."""


class FormatError(TempokitError):
    """A file does not conform to its declared binary layout."""


class ValidationError(TempokitError):
    """Input data violates a documented invariant (NaN payloads, ragged
    token lists, out-of-domain arguments)."""


class ShapeError(TempokitError):
    """Operands have inconsistent dimensions."""


class NumericError(TempokitError):
    """A computation produced a non-finite value."""


class DurationError(TempokitError):
    """Audio and video lengths disagree beyond the truncation policy."""
