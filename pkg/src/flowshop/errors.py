"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage problems exit 1, data problems
(validation, parsing, file formats) exit 2, numeric failures exit 3.
"""


class FlowshopError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(FlowshopError):
    """Invalid domain object: bad permutation, shape mismatch, bad parameter."""


class DataError(FlowshopError):
    """Broken external data: parse failures, container version/format problems."""


class NumericError(FlowshopError):
    """Non-finite values or other numeric breakdowns during computation."""
