"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto its exit-code scheme: file/parameter problems
exit 2, shape mismatches exit 3, solver divergence exits 4.
"""


class CassiError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CassiError):
    """A binary file could not be parsed."""


class BadMagicError(FormatError):
    """File does not start with the expected magic tag."""


class TruncatedPayloadError(FormatError):
    """File payload is shorter (or longer) than the header promises."""


class DimensionOverflowError(FormatError):
    """Header dimensions are zero or too large to allocate."""


class ShapeError(CassiError):
    """Array dimensions of two objects do not agree."""


class ParameterError(CassiError):
    """A scalar parameter is outside its valid range."""


class DivergenceError(CassiError):
    """The solver produced a non-finite value."""
