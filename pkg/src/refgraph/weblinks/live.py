"""
Live reachability checks of cited URLs.

Each URL is requested with HEAD, falling back to GET when HEAD ends in an
error status (many servers reject HEAD). Redirects are followed by hand to
a bounded depth so every hop goes through the per-host politeness delay.
"""

import asyncio
import logging
import time
from collections.abc import Callable, Sequence
from typing import Any
from urllib.parse import urljoin, urlsplit

import requests

from refgraph.config import WeblinkConfig

logger = logging.getLogger(__name__)

UNREACHABLE = 0


class LiveChecker:
    """
    Rate-limited asynchronous link checker.

    Blocking requests run in the default executor. At most
    config.max_in_flight URLs are checked at once; requests to one host are
    serialized and spaced by at least 1 / config.rate seconds.

    Args:
        config: Rate, timeout and redirect settings
        session: requests.Session or a compatible double
        clock: Monotonic clock, replaceable in tests
    """

    def __init__(
        self,
        config: WeblinkConfig | None = None,
        session: Any = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config or WeblinkConfig()
        self.session = session if session is not None else requests.Session()
        self.session.headers["User-Agent"] = self.config.user_agent
        self.clock = clock
        self._host_locks: dict[str, asyncio.Lock] = {}
        self._last_request: dict[str, float] = {}
        self.request_log: list[tuple[str, str, float]] = []

    @property
    def delay(self) -> float:
        return 1.0 / self.config.rate

    def _lock_for(self, host: str) -> asyncio.Lock:
        if host not in self._host_locks:
            self._host_locks[host] = asyncio.Lock()
        return self._host_locks[host]

    async def _request(self, method: str, url: str) -> Any:
        host = urlsplit(url).hostname or ""
        async with self._lock_for(host):
            last = self._last_request.get(host)
            if last is not None:
                wait = last + self.delay - self.clock()
                if wait > 0:
                    await asyncio.sleep(wait)
            self._last_request[host] = self.clock()
            self.request_log.append((method, url, self._last_request[host]))
            loop = asyncio.get_running_loop()
            call = self.session.head if method == "HEAD" else self.session.get
            response = await loop.run_in_executor(
                None,
                lambda: call(url, allow_redirects=False, timeout=self.config.timeout,
                             stream=method == "GET"),
            )
            response.close()
            return response

    async def _follow(self, method: str, url: str) -> int:
        """Final status after at most max_redirects hops; UNREACHABLE past that depth."""
        for _ in range(self.config.max_redirects + 1):
            response = await self._request(method, url)
            status = int(response.status_code)
            location = response.headers.get("Location")
            if not (300 <= status < 400 and location):
                return status
            url = urljoin(url, location)
        logger.debug(f"redirect depth {self.config.max_redirects} exceeded at {url}")
        return UNREACHABLE

    async def check(self, url: str) -> int:
        """
        Final HTTP status of url.

        Returns:
            Status code after redirects; 0 when the URL gave no final status,
            including redirect chains longer than config.max_redirects
        """
        try:
            status = await self._follow("HEAD", url)
            if status >= 400:
                status = await self._follow("GET", url)
            return status
        except requests.RequestException as e:
            logger.debug(f"live check of {url} failed: {e}")
            return UNREACHABLE
        except Exception as e:
            logger.warning(f"live check of {url} failed unexpectedly: {type(e).__name__}: {e}")
            return UNREACHABLE

    async def check_all(self, urls: Sequence[str]) -> list[int]:
        """Check URLs concurrently; results follow input order."""
        semaphore = asyncio.Semaphore(self.config.max_in_flight)

        async def bounded(url: str) -> int:
            async with semaphore:
                return await self.check(url)

        return list(await asyncio.gather(*(bounded(url) for url in urls)))


def live_check(
    urls: Sequence[str], config: WeblinkConfig | None = None, session: Any = None
) -> list[int]:
    """
    Check a sample of URLs synchronously.

    Args:
        urls: URLs to check
        config: Rate limit (must be > 0), timeout and redirect depth
        session: requests.Session or a compatible double

    Returns:
        Final statuses in input order; 0 marks unreachable hosts
    """
    checker = LiveChecker(config, session)
    return asyncio.run(checker.check_all(urls))
