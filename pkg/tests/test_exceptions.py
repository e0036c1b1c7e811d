"""Tests for centralized exception handling."""

import pytest

from refgraph.exceptions import (
    ConfigurationError,
    CycleError,
    LookupFailed,
    PipelineError,
    RecordRejected,
    RefgraphError,
    SortError,
    TaskFailedError,
    UnknownTaskError,
    ValidationError,
)


def test_exception_hierarchy():
    """Test exception inheritance."""
    assert issubclass(ConfigurationError, RefgraphError)
    assert issubclass(ValidationError, RefgraphError)
    assert issubclass(RecordRejected, ValidationError)
    assert issubclass(SortError, RefgraphError)
    assert issubclass(PipelineError, RefgraphError)
    assert issubclass(UnknownTaskError, PipelineError)
    assert issubclass(CycleError, PipelineError)
    assert issubclass(TaskFailedError, PipelineError)
    assert issubclass(LookupFailed, RefgraphError)


def test_exception_messages():
    """Test exceptions can carry messages."""
    error = SortError("tmp dir full")
    assert str(error) == "tmp dir full"

    error = LookupFailed("cdx timed out")
    assert str(error) == "cdx timed out"


def test_record_rejected_reason():
    """Test RecordRejected keeps a machine-readable reason."""
    error = RecordRejected("malformed-json", "line 3")
    assert error.reason == "malformed-json"
    assert error.detail == "line 3"
    assert str(error) == "malformed-json: line 3"

    bare = RecordRejected("empty-line")
    assert bare.detail is None
    assert str(bare) == "empty-line"


def test_task_failed_names_task():
    """Test TaskFailedError records the failed task."""
    error = TaskFailedError("fuzzy", "ValueError: boom")
    assert error.task == "fuzzy"
    assert str(error) == "task fuzzy failed: ValueError: boom"


def test_all_exceptions_are_catchable_as_refgraph_error():
    """Test that all custom exceptions can be caught with base class."""
    exceptions = [
        ConfigurationError("config"),
        ValidationError("validation"),
        RecordRejected("reason"),
        SortError("sort"),
        PipelineError("pipeline"),
        UnknownTaskError("unknown"),
        CycleError("cycle"),
        TaskFailedError("task", "failed"),
        LookupFailed("lookup"),
    ]

    for exc in exceptions:
        with pytest.raises(RefgraphError):
            raise exc
