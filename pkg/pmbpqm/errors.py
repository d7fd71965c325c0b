"""
Exception types raised by the pmbpqm library.

The CLI maps these onto exit codes: ContractViolation -> 2, ResourceLimitError -> 3.
"""


class PMBPQMError(Exception):
    """Base class for every error raised by pmbpqm."""


class ContractViolation(PMBPQMError, ValueError):
    """An input broke an operation's precondition."""


class GraphError(ContractViolation):
    """A factor graph is not a valid rooted tree."""


class ResourceLimitError(PMBPQMError):
    """A computation would exceed a configured resource cap."""
