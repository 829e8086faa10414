"""Exception hierarchy shared across the package.

Split into input problems (malformed models, files, shapes) and solver
faults (an internal computation that should have succeeded but did not).
The CLI maps the former to exit code 2 and the latter to exit code 1.
"""


class RecgameError(Exception):
    """Base class for every error raised by this package."""


class InputError(RecgameError):
    """A model, file, or argument violates the documented contract."""


class SolverFault(RecgameError):
    """An internal solve failed; carries enough context to reproduce it."""
