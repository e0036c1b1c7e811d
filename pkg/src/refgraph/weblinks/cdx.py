"""
Archive snapshot lookups through a CDX capture index API.
"""

import logging
import re
import time
from collections.abc import Callable
from typing import Any

import requests

from refgraph.config import WeblinkConfig
from refgraph.exceptions import LookupFailed

logger = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({429})
CAPTURE_ROWS = 5
_STATUS_RE = re.compile(r"[0-9]{3}")


def _retryable(status: int) -> bool:
    return status in RETRY_STATUSES or status >= 500


def parse_cdx_rows(rows: Any) -> int | None:
    """
    Status of the most recent capture in a JSON CDX answer.

    The first row is the field header. Captures whose status is not a number
    in [100, 599] (e.g. "-" for revisits) are skipped.

    Returns:
        HTTP status of the latest usable capture, None when there is none
    """
    if not isinstance(rows, list) or len(rows) < 2 or not isinstance(rows[0], list):
        return None
    header = rows[0]
    try:
        ts_col = header.index("timestamp")
        status_col = header.index("statuscode")
    except ValueError:
        return None

    best: tuple[str, int] | None = None
    for row in rows[1:]:
        if not isinstance(row, list) or len(row) <= max(ts_col, status_col):
            continue
        status = str(row[status_col])
        if not _STATUS_RE.fullmatch(status) or not 100 <= int(status) <= 599:
            continue
        candidate = (str(row[ts_col]), int(status))
        if best is None or candidate[0] > best[0]:
            best = candidate
    return best[1] if best else None


class CDXClient:
    """
    CDX API client with retry and exponential backoff.

    Timeouts, connection errors, 429 and 5xx answers are retried up to
    config.retries attempts in total, sleeping backoff * 2**attempt between
    attempts; then the lookup fails with LookupFailed.

    Args:
        config: Endpoint, timeout and retry settings
        session: requests.Session or a compatible double (e.g. FixtureSession)
        sleep: Delay function, replaceable in tests
    """

    def __init__(
        self,
        config: WeblinkConfig | None = None,
        session: Any = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config or WeblinkConfig()
        self.session = session if session is not None else requests.Session()
        self.session.headers["User-Agent"] = self.config.user_agent
        self.sleep = sleep
        self.requests_made = 0

    def params(self, url: str) -> dict[str, str]:
        """
        Query for the newest captures of url, newest first.

        Revisit records carry no status ("-"); the filter drops them server
        side and the few extra rows let parse_cdx_rows skip any that remain.
        """
        return {
            "url": url,
            "output": "json",
            "fl": "urlkey,timestamp,statuscode",
            "filter": "!statuscode:-",
            "limit": str(CAPTURE_ROWS),
            "sort": "reverse",
        }

    def lookup(self, url: str) -> int | None:
        """
        Status of the most recent capture of url.

        Returns:
            HTTP status, or None when the archive holds no capture

        Raises:
            LookupFailed: When all attempts time out or fail with 429/5xx, or
                the API answers with another error status
        """
        last_error = "no attempt made"
        for attempt in range(self.config.retries):
            if attempt:
                self.sleep(self.config.backoff * 2 ** (attempt - 1))
            self.requests_made += 1
            try:
                response = self.session.get(
                    self.config.cdx_endpoint, params=self.params(url), timeout=self.config.timeout
                )
            except (requests.Timeout, requests.ConnectionError) as e:
                last_error = f"{type(e).__name__}: {e}"
                logger.debug(f"cdx attempt {attempt + 1} for {url} failed: {last_error}")
                continue
            if _retryable(response.status_code):
                last_error = f"HTTP {response.status_code}"
                logger.debug(f"cdx attempt {attempt + 1} for {url}: {last_error}")
                continue
            if response.status_code >= 400:
                raise LookupFailed(f"cdx lookup of {url} answered HTTP {response.status_code}")
            text = response.text.strip()
            if not text:
                return None
            try:
                rows = response.json()
            except ValueError as e:
                raise LookupFailed(f"cdx lookup of {url} returned invalid JSON: {e}") from e
            return parse_cdx_rows(rows)
        raise LookupFailed(
            f"cdx lookup of {url} failed after {self.config.retries} attempts: {last_error}"
        )


def cdx_lookup(url: str, client: CDXClient | None = None) -> int | None:
    """Most recent archive capture status of url; see CDXClient.lookup."""
    return (client or CDXClient()).lookup(url)
