"""
Link audit records and preservation coverage.
"""

import json
from collections.abc import Iterable
from dataclasses import dataclass
from typing import Any
from urllib.parse import urlsplit

from refgraph.exceptions import ValidationError
from refgraph.types import dumps


def _valid_status(status: int | None, allow_unreachable: bool = False) -> bool:
    if status is None:
        return True
    if allow_unreachable and status == 0:
        return True
    return 100 <= status <= 599


@dataclass
class WeblinkAudit:
    """
    Archive and live status of one cited URL.

    Attributes:
        url: Cleaned absolute http(s) URL
        source_ident: Work citing the URL
        archive_status: Status of the most recent capture; None when not
            archived or when the lookup failed
        live_status: Final live status; 0 when unreachable, None when not
            checked
        checked_at: ISO 8601 UTC timestamp of the audit
        lookup_failed: The archive lookup gave up (distinct from no capture)
    """
    url: str
    source_ident: str
    archive_status: int | None = None
    live_status: int | None = None
    checked_at: str = ""
    lookup_failed: bool = False

    def __post_init__(self) -> None:
        parts = urlsplit(self.url)
        if parts.scheme not in ("http", "https") or not parts.hostname:
            raise ValidationError(f"audit url must be absolute http(s): {self.url!r}")
        if not _valid_status(self.archive_status):
            raise ValidationError(f"archive status out of range: {self.archive_status}")
        if not _valid_status(self.live_status, allow_unreachable=True):
            raise ValidationError(f"live status out of range: {self.live_status}")
        if self.lookup_failed and self.archive_status is not None:
            raise ValidationError("a failed lookup carries no archive status")

    def to_dict(self) -> dict[str, Any]:
        return {
            "url": self.url,
            "source_ident": self.source_ident,
            "archive_status": self.archive_status,
            "live_status": self.live_status,
            "checked_at": self.checked_at,
            "lookup_failed": self.lookup_failed,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, line: str) -> "WeblinkAudit":
        data = json.loads(line)
        return cls(
            url=data["url"],
            source_ident=data["source_ident"],
            archive_status=data.get("archive_status"),
            live_status=data.get("live_status"),
            checked_at=data.get("checked_at", ""),
            lookup_failed=bool(data.get("lookup_failed", False)),
        )


def is_preserved_strict(status: int | None) -> bool:
    return status == 200


def is_preserved_upper(status: int | None) -> bool:
    """200, any redirect, or any server error counts for the upper bound; 4xx does not."""
    if status is None:
        return False
    return status == 200 or 300 <= status <= 399 or 500 <= status <= 599


@dataclass
class CoverageReport:
    """
    Preservation fractions over a set of audits.

    Fractions are taken over audits whose lookup completed; failed lookups
    are reported separately and excluded from the denominator.
    """
    total: int = 0
    lookup_failed: int = 0
    preserved_strict_count: int = 0
    preserved_upper_count: int = 0
    live_checked: int = 0
    live_ok_count: int = 0
    live_unreachable: int = 0

    @property
    def looked_up(self) -> int:
        return self.total - self.lookup_failed

    @property
    def preserved_strict(self) -> float:
        return self.preserved_strict_count / self.looked_up if self.looked_up else 0.0

    @property
    def preserved_upper(self) -> float:
        return self.preserved_upper_count / self.looked_up if self.looked_up else 0.0

    @property
    def live_ok(self) -> float | None:
        """Fraction of live-checked URLs answering 200; None when none were checked."""
        return self.live_ok_count / self.live_checked if self.live_checked else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "total": self.total,
            "lookup_failed": self.lookup_failed,
            "preserved_strict": self.preserved_strict,
            "preserved_upper": self.preserved_upper,
            "preserved_strict_count": self.preserved_strict_count,
            "preserved_upper_count": self.preserved_upper_count,
            "live_checked": self.live_checked,
            "live_ok": self.live_ok,
            "live_unreachable": self.live_unreachable,
        }


def coverage_report(audits: Iterable[WeblinkAudit]) -> CoverageReport:
    """Single pass over audits computing strict and upper-bound preservation."""
    report = CoverageReport()
    for audit in audits:
        report.total += 1
        if audit.lookup_failed:
            report.lookup_failed += 1
        else:
            if is_preserved_strict(audit.archive_status):
                report.preserved_strict_count += 1
            if is_preserved_upper(audit.archive_status):
                report.preserved_upper_count += 1
        if audit.live_status is not None:
            report.live_checked += 1
            if audit.live_status == 200:
                report.live_ok_count += 1
            elif audit.live_status == 0:
                report.live_unreachable += 1
    return report
