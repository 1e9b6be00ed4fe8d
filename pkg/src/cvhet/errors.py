"""Exception taxonomy shared across the package.

Three failure classes map onto the CLI exit codes:

* bad inputs (``ParameterError``, ``ValidationError``, ``ParseError``) -> exit 1
* internal inconsistencies (``InternalConsistencyError``) -> exit 2
"""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class ValidationError(ParameterError):
    """A domain object violates one of its invariants.

    The message names the violated invariant and the measured residual.
    """


class ParseError(ValueError):
    """Malformed text input (state specs, sample files)."""


class InternalConsistencyError(RuntimeError):
    """Two evaluation paths that must agree do not, or an internal
    sanity check failed.  Indicates a bug, not a user error."""
