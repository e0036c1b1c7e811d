"""
End-to-end link audit: extract, look up, sample, live check.
"""

import asyncio
import datetime
import logging
import random
import time
from collections.abc import Callable, Iterable
from typing import Any, TypeVar

from refgraph.config import WeblinkConfig
from refgraph.exceptions import LookupFailed
from refgraph.types import RawReference
from refgraph.weblinks.cdx import CDXClient
from refgraph.weblinks.live import LiveChecker
from refgraph.weblinks.report import WeblinkAudit
from refgraph.weblinks.urls import extract_clean_urls

logger = logging.getLogger(__name__)

T = TypeVar("T")


def sample_urls(items: Iterable[T], k: int, seed: int = 0) -> list[T]:
    """
    Uniform sample of k items in one pass (reservoir sampling).

    Returns:
        Up to k items in stream order; all items when fewer than k
    """
    if k <= 0:
        return []
    rng = random.Random(seed)
    reservoir: list[tuple[int, T]] = []
    for index, item in enumerate(items):
        if index < k:
            reservoir.append((index, item))
            continue
        slot = rng.randint(0, index)
        if slot < k:
            reservoir[slot] = (index, item)
    return [item for _, item in sorted(reservoir, key=lambda pair: pair[0])]


def _utc_now() -> str:
    return datetime.datetime.now(datetime.UTC).strftime("%Y-%m-%dT%H:%M:%SZ")


def audit_references(
    refs: Iterable[RawReference],
    config: WeblinkConfig | None = None,
    *,
    session: Any = None,
    live_sample: int | None = None,
    seed: int = 0,
    now: Callable[[], str] = _utc_now,
    sleep: Callable[[float], None] | None = None,
) -> list[WeblinkAudit]:
    """
    Audit every cleaned URL cited by refs.

    Each distinct (source, url) pair gets one archive lookup. When
    live_sample is given, a seeded uniform sample of that many audits is
    also live-checked.

    Args:
        refs: References
        config: Endpoint, rate and retry settings
        session: requests.Session or FixtureSession shared by lookups and checks
        live_sample: Number of URLs to live-check (None: no live checks)
        seed: Sampler seed
        now: Timestamp source
        sleep: Backoff delay function for archive retries

    Returns:
        Audits in reference order
    """
    config = config or WeblinkConfig()
    client = CDXClient(config, session, sleep=sleep or time.sleep)

    audits: list[WeblinkAudit] = []
    seen: set[tuple[str, str]] = set()
    failed = 0
    for ref in refs:
        for url in extract_clean_urls(ref):
            if (ref.source_ident, url) in seen:
                continue
            seen.add((ref.source_ident, url))
            try:
                status = client.lookup(url)
                lookup_failed = False
            except LookupFailed as e:
                logger.debug(str(e))
                status, lookup_failed = None, True
                failed += 1
            audits.append(WeblinkAudit(
                url=url,
                source_ident=ref.source_ident,
                archive_status=status,
                checked_at=now(),
                lookup_failed=lookup_failed,
            ))
    if failed:
        logger.warning(f"weblinks: {failed} of {len(audits)} archive lookups failed")

    if live_sample:
        chosen = sample_urls(range(len(audits)), live_sample, seed)
        checker = LiveChecker(config, client.session)
        statuses = asyncio.run(checker.check_all([audits[i].url for i in chosen]))
        for index, status in zip(chosen, statuses, strict=True):
            audits[index].live_status = status
    return audits
