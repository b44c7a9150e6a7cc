"""Exception taxonomy shared across the toolkit.

InputError maps to CLI exit code 2, ComputationError to exit code 3.
"""


class AuditError(Exception):
    """Base class for all toolkit errors."""


class InputError(AuditError):
    """Invalid or malformed input: files, manifests, predictions, arguments."""


class ComputationError(AuditError):
    """A computation could not be carried out on otherwise valid input."""


class DegenerateStatisticsError(ComputationError):
    """Degenerate statistical input (zero variance, degenerate agreement, ...)."""
