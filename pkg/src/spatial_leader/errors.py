"""Exception hierarchy shared by the pipeline stages.

The CLI maps :class:`InputError` to exit status 1 and
:class:`NumericalError` to exit status 2.
"""


class InputError(ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(ArithmeticError):
    """A computation could not produce a well-defined result."""
