"""
Weblink preservation audits.

Cited URLs are extracted and cleaned, looked up in a web archive's CDX
API, optionally live-checked, and summarized as preservation fractions.
"""

from refgraph.weblinks.audit import audit_references, sample_urls
from refgraph.weblinks.cdx import CDXClient, cdx_lookup, parse_cdx_rows
from refgraph.weblinks.fixtures import (
    FixtureSession,
    FixtureStore,
    RecordingSession,
    load_session,
    request_key,
)
from refgraph.weblinks.live import UNREACHABLE, LiveChecker, live_check
from refgraph.weblinks.report import (
    CoverageReport,
    WeblinkAudit,
    coverage_report,
    is_preserved_strict,
    is_preserved_upper,
)
from refgraph.weblinks.urls import clean_url, extract_clean_urls, find_urls

__all__ = [
    "UNREACHABLE",
    "CDXClient",
    "CoverageReport",
    "FixtureSession",
    "FixtureStore",
    "LiveChecker",
    "RecordingSession",
    "WeblinkAudit",
    "audit_references",
    "cdx_lookup",
    "clean_url",
    "coverage_report",
    "extract_clean_urls",
    "find_urls",
    "is_preserved_strict",
    "is_preserved_upper",
    "live_check",
    "load_session",
    "parse_cdx_rows",
    "request_key",
    "sample_urls",
]
