"""
Centralized exception definitions for refgraph.

This module defines the exception hierarchy used throughout refgraph.
All exceptions inherit from RefgraphError for easy catching.

Exception Hierarchy:
    RefgraphError (base)
    ├── ConfigurationError (invalid configuration)
    ├── ValidationError (record or report invariant violated)
    │   └── RecordRejected (one input line could not be accepted)
    ├── SortError (external sort / grouping failures)
    ├── PipelineError (task graph failures)
    │   ├── UnknownTaskError (target not registered)
    │   ├── CycleError (dependency cycle)
    │   └── TaskFailedError (a task action raised)
    └── LookupFailed (archive lookup gave up after retries)

Streaming stages never let a single bad line or group abort a run:
RecordRejected and per-group errors are counted and logged by the caller.
"""


class RefgraphError(Exception):
    """
    Base exception for all refgraph errors.

    All custom exceptions in refgraph inherit from this class,
    allowing users to catch all toolkit errors with a single except clause.
    """

    pass


class ConfigurationError(RefgraphError):
    """
    Configuration-related errors.

    Raised when:
    - Unknown keys appear in a config file
    - A sort budget is below the minimum
    - A temporary directory is not writable
    - An unknown compression codec is requested
    """

    pass


class ValidationError(RefgraphError):
    """
    Invariant violations on records and reports.

    Raised when:
    - A BiblioRef links a work to itself
    - An unmatched edge carries a target
    - Report arithmetic does not add up
    """

    pass


class RecordRejected(ValidationError):
    """
    A single input line was rejected during ingest.

    Attributes:
        reason: Short machine-readable reason (e.g. "malformed-json")
    """

    def __init__(self, reason: str, detail: str | None = None):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


class SortError(RefgraphError):
    """
    External sort failures.

    Raised when:
    - Spill runs cannot be written (e.g. temporary directory full)
    - Grouped input turns out not to be sorted
    """

    pass


class PipelineError(RefgraphError):
    """
    Task orchestration errors.

    Base class for errors raised while planning or running the task graph.
    """

    pass


class UnknownTaskError(PipelineError):
    """Raised when a target or dependency name is not registered."""

    pass


class CycleError(PipelineError):
    """Raised when the task graph contains a dependency cycle."""

    pass


class TaskFailedError(PipelineError):
    """
    Task execution failures.

    Attributes:
        task: Name of the failed task
    """

    def __init__(self, task: str, message: str):
        self.task = task
        super().__init__(f"task {task} failed: {message}")


class LookupFailed(RefgraphError):
    """
    Archive lookup failures.

    Raised when the CDX API keeps timing out or answering with server
    errors after all retries. Distinct from "no capture".
    """

    pass
