"""
refgraph - Single-machine citation graph derivation.

Matches raw references against a catalog by identifier and by verified
title/author similarity, fuses the candidates into one edge per reference,
compares the result with external edge sets and audits cited web links.
"""

__version__ = "0.1.0"

from refgraph.config import (  # noqa: E402
    InputPaths,
    PipelineConfig,
    SortSpec,
    VerifyConfig,
    WeblinkConfig,
)
from refgraph.exceptions import (  # noqa: E402
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
from refgraph.types import (  # noqa: E402
    Biblio,
    BiblioRef,
    MatchReason,
    MatchResult,
    MatchStatus,
    RawReference,
    ReleaseRecord,
    ReleaseStage,
    WikipediaRow,
)

__all__ = [
    "__version__",
    # Configuration
    "InputPaths",
    "PipelineConfig",
    "SortSpec",
    "VerifyConfig",
    "WeblinkConfig",
    # Exceptions
    "ConfigurationError",
    "CycleError",
    "LookupFailed",
    "PipelineError",
    "RecordRejected",
    "RefgraphError",
    "SortError",
    "TaskFailedError",
    "UnknownTaskError",
    "ValidationError",
    # Records
    "Biblio",
    "BiblioRef",
    "MatchReason",
    "MatchResult",
    "MatchStatus",
    "RawReference",
    "ReleaseRecord",
    "ReleaseStage",
    "WikipediaRow",
]
