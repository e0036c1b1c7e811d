"""
Recorded HTTP responses for offline link audits.

A fixture file is a JSON object mapping ``"<METHOD> <full URL>"`` to a
recorded response, or to a list of responses served in order (the last one
repeats). A response is an object with ``status`` and optional ``headers``,
``json`` and ``text``, or ``{"error": "timeout" | "connection"}``.

FixtureSession answers from such a file with the subset of the
requests.Session interface the link audit uses; unknown requests fail like
an unreachable host, so fixture mode never touches the network.
"""

import json
import logging
import threading
from pathlib import Path
from typing import Any

import requests
from requests.structures import CaseInsensitiveDict

logger = logging.getLogger(__name__)


def request_key(method: str, url: str, params: dict[str, Any] | None = None) -> str:
    """Fixture key of a request; query parameters are encoded the way requests sends them."""
    prepared = requests.Request(method.upper(), url, params=params).prepare()
    return f"{method.upper()} {prepared.url}"


class FixtureResponse:
    """Response double with the requests.Response attributes used by refgraph."""

    def __init__(self, url: str, data: dict[str, Any]):
        self.url = url
        self.status_code = int(data.get("status", 200))
        self.headers = CaseInsensitiveDict(data.get("headers") or {})
        self._json = data.get("json")
        self.text = data.get("text") if data.get("text") is not None else (
            json.dumps(self._json) if self._json is not None else ""
        )

    @property
    def ok(self) -> bool:
        return self.status_code < 400

    def json(self) -> Any:
        if self._json is not None:
            return self._json
        return json.loads(self.text)

    def close(self) -> None:
        pass


class FixtureStore:
    """
    Request to response map backed by a JSON file.

    Args:
        path: Fixture file; loaded when it exists
    """

    def __init__(self, path: Path | None = None, entries: dict[str, Any] | None = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, Any] = dict(entries or {})
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as f:
                self.entries.update(json.load(f))
        self._served: dict[str, int] = {}
        self._lock = threading.Lock()

    def add(self, key: str, response: dict[str, Any]) -> None:
        """Record a response; repeated keys accumulate into a sequence."""
        with self._lock:
            existing = self.entries.get(key)
            if existing is None:
                self.entries[key] = response
            elif isinstance(existing, list):
                existing.append(response)
            else:
                self.entries[key] = [existing, response]

    def next_response(self, key: str) -> dict[str, Any] | None:
        """The next recorded response for key, or None when unrecorded."""
        with self._lock:
            entry = self.entries.get(key)
            if entry is None or not isinstance(entry, list):
                return entry
            if not entry:
                return None
            index = self._served.get(key, 0)
            self._served[key] = index + 1
            return entry[min(index, len(entry) - 1)]

    def save(self, path: Path | None = None) -> None:
        target = Path(path) if path else self.path
        if target is None:
            raise ValueError("no fixture path given")
        with open(target, "w", encoding="utf-8") as f:
            json.dump(self.entries, f, indent=2, sort_keys=True)
            f.write("\n")


class FixtureSession:
    """requests.Session stand-in that serves a FixtureStore."""

    def __init__(self, store: FixtureStore):
        self.store = store
        self.headers: dict[str, str] = {}

    def request(self, method: str, url: str, params: dict[str, Any] | None = None,
                **kwargs: Any) -> FixtureResponse:
        key = request_key(method, url, params)
        data = self.store.next_response(key)
        if data is None:
            raise requests.ConnectionError(f"no fixture for {key}")
        error = data.get("error")
        if error == "timeout":
            raise requests.Timeout(f"recorded timeout for {key}")
        if error:
            raise requests.ConnectionError(f"recorded {error} for {key}")
        return FixtureResponse(key.split(" ", 1)[1], data)

    def get(self, url: str, **kwargs: Any) -> FixtureResponse:
        return self.request("GET", url, **kwargs)

    def head(self, url: str, **kwargs: Any) -> FixtureResponse:
        return self.request("HEAD", url, **kwargs)

    def close(self) -> None:
        pass


class RecordingSession:
    """Forwards to a real session and records every answer into a store."""

    def __init__(self, session: requests.Session, store: FixtureStore):
        self.session = session
        self.store = store
        self.headers = session.headers

    def request(self, method: str, url: str, params: dict[str, Any] | None = None,
                **kwargs: Any) -> requests.Response:
        key = request_key(method, url, params)
        try:
            response = self.session.request(method, url, params=params, **kwargs)
        except requests.Timeout:
            self.store.add(key, {"error": "timeout"})
            raise
        except requests.ConnectionError:
            self.store.add(key, {"error": "connection"})
            raise
        recorded: dict[str, Any] = {"status": response.status_code}
        location = response.headers.get("Location")
        if location:
            recorded["headers"] = {"Location": location}
        if method.upper() == "GET" and not kwargs.get("stream"):
            recorded["text"] = response.text
        self.store.add(key, recorded)
        return response

    def get(self, url: str, **kwargs: Any) -> requests.Response:
        return self.request("GET", url, **kwargs)

    def head(self, url: str, **kwargs: Any) -> requests.Response:
        return self.request("HEAD", url, **kwargs)

    def close(self) -> None:
        self.session.close()


def load_session(path: Path) -> FixtureSession:
    """FixtureSession over a fixture file."""
    store = FixtureStore(path)
    logger.info(f"fixture mode: {len(store.entries)} recorded requests from {path}")
    return FixtureSession(store)
