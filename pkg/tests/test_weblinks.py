"""Tests for the weblink audit, run offline against recorded responses."""

import random
import time
from pathlib import Path
from typing import Any

import pytest

from refgraph.config import WeblinkConfig
from refgraph.exceptions import LookupFailed, ValidationError
from refgraph.weblinks import (
    UNREACHABLE,
    CDXClient,
    CoverageReport,
    FixtureSession,
    FixtureStore,
    LiveChecker,
    RecordingSession,
    WeblinkAudit,
    audit_references,
    clean_url,
    coverage_report,
    extract_clean_urls,
    find_urls,
    is_preserved_strict,
    is_preserved_upper,
    live_check,
    load_session,
    parse_cdx_rows,
    request_key,
    sample_urls,
)
from tests.synthetic import reference

ENDPOINT = WeblinkConfig().cdx_endpoint
HEADER = ["urlkey", "timestamp", "statuscode"]
FAST = WeblinkConfig(rate=1000.0, backoff=1.0)


def cdx_key(url: str) -> str:
    return request_key("GET", ENDPOINT, CDXClient(FAST, FixtureSession(FixtureStore())).params(url))


def capture(status: str) -> dict[str, Any]:
    return {"status": 200, "json": [HEADER, ["org,example)/", "20200101000000", status]]}


class TestUrls:
    """Test URL extraction and cleaning."""

    @pytest.mark.parametrize("raw,expected", [
        ("http://example.org/page.", "http://example.org/page"),
        ("http://example.org/a;\"", "http://example.org/a"),
        ("https://en.wikipedia.org/wiki/Foo_(bar)).", "https://en.wikipedia.org/wiki/Foo_(bar)"),
        ("http://example.org/x]", "http://example.org/x"),
        ("http://http://example.org/x", "http://example.org/x"),
        ("www.example.org/a", "http://www.example.org/a"),
        ("HTTP://Example.ORG/Path?Q=1", "http://example.org/Path?Q=1"),
        ("https://user@Example.org:8080/p", "https://user@example.org:8080/p"),
    ])
    def test_clean(self, raw: str, expected: str) -> None:
        assert clean_url(raw) == expected

    @pytest.mark.parametrize("raw", [
        None,
        "",
        "ftp://example.org/file",
        "http://localhost/",
        "https://doi.org/10.1001/x",
        "http://dx.doi.org/10.1001/x",
        "example.org",
    ])
    def test_rejected(self, raw: str | None) -> None:
        assert clean_url(raw) is None

    def test_clean_is_idempotent(self) -> None:
        for raw in ("http://http://Example.org/a).", "www.example.org/b,", "https://a.org/c"):
            once = clean_url(raw)
            assert once is not None
            assert clean_url(once) == once

    def test_find_urls(self) -> None:
        text = "Data at http://example.org/a) and (www.example.com/b). Done."
        assert list(find_urls(text)) == ["http://example.org/a)", "www.example.com/b)."]
        assert list(find_urls(None)) == []

    def test_extract_from_reference(self) -> None:
        ref = reference(
            "s", 0,
            url="http://a.org/x.",
            unstructured="See http://a.org/x and www.b.org/y; also https://doi.org/10.1001/z",
        )
        assert extract_clean_urls(ref) == ["http://a.org/x", "http://www.b.org/y"]


class TestCDX:
    """Test archive lookups."""

    def test_parse_latest_usable_capture(self) -> None:
        rows = [
            HEADER,
            ["k", "20190101000000", "404"],
            ["k", "20200101000000", "200"],
            ["k", "20210101000000", "-"],
            ["k", "20220101000000", "²⁰⁰"],
        ]
        assert parse_cdx_rows(rows) == 200

    @pytest.mark.parametrize("rows", [[], [HEADER], None, "text", [["a", "b"], ["1", "2"]]])
    def test_parse_no_capture(self, rows: Any) -> None:
        assert parse_cdx_rows(rows) is None

    def test_request_parameters(self) -> None:
        client = CDXClient(FAST, FixtureSession(FixtureStore()))
        assert client.params("http://a.org/") == {
            "url": "http://a.org/",
            "output": "json",
            "fl": "urlkey,timestamp,statuscode",
            "filter": "!statuscode:-",
            "limit": "5",
            "sort": "reverse",
        }
        assert client.session.headers["User-Agent"] == FAST.user_agent

    def test_newest_revisit_falls_back_to_older_capture(self) -> None:
        rows = [
            HEADER,
            ["org,a)/", "20230101000000", "-"],
            ["org,a)/", "20220101000000", "-"],
            ["org,a)/", "20190101000000", "200"],
        ]
        store = FixtureStore(entries={cdx_key("http://a.org/"): {"status": 200, "json": rows}})
        client = CDXClient(FAST, FixtureSession(store))

        assert client.lookup("http://a.org/") == 200
        assert client.requests_made == 1

    def test_only_revisits_means_no_capture(self) -> None:
        rows = [HEADER, ["org,a)/", "20230101000000", "-"]]
        store = FixtureStore(entries={cdx_key("http://a.org/"): {"status": 200, "json": rows}})
        assert CDXClient(FAST, FixtureSession(store)).lookup("http://a.org/") is None

    def test_capture_status(self) -> None:
        store = FixtureStore(entries={cdx_key("http://a.org/"): capture("302")})
        client = CDXClient(FAST, FixtureSession(store))
        assert client.lookup("http://a.org/") == 302

    def test_no_capture(self) -> None:
        store = FixtureStore(entries={
            cdx_key("http://a.org/"): {"status": 200, "text": ""},
            cdx_key("http://b.org/"): {"status": 200, "json": []},
        })
        client = CDXClient(FAST, FixtureSession(store))
        assert client.lookup("http://a.org/") is None
        assert client.lookup("http://b.org/") is None

    def test_retries_with_backoff(self) -> None:
        store = FixtureStore(entries={
            cdx_key("http://a.org/"): [{"error": "timeout"}, {"status": 503}, capture("200")],
        })
        sleeps: list[float] = []
        client = CDXClient(FAST, FixtureSession(store), sleep=sleeps.append)

        assert client.lookup("http://a.org/") == 200
        assert sleeps == [1.0, 2.0]
        assert client.requests_made == 3

    def test_gives_up(self) -> None:
        store = FixtureStore(entries={cdx_key("http://a.org/"): {"status": 429}})
        sleeps: list[float] = []
        client = CDXClient(FAST, FixtureSession(store), sleep=sleeps.append)

        with pytest.raises(LookupFailed, match="3 attempts"):
            client.lookup("http://a.org/")
        assert len(sleeps) == 2

    def test_client_error_not_retried(self) -> None:
        store = FixtureStore(entries={cdx_key("http://a.org/"): {"status": 400}})
        client = CDXClient(FAST, FixtureSession(store), sleep=lambda s: None)

        with pytest.raises(LookupFailed, match="HTTP 400"):
            client.lookup("http://a.org/")
        assert client.requests_made == 1

    def test_unrecorded_request_fails(self) -> None:
        client = CDXClient(FAST, FixtureSession(FixtureStore()), sleep=lambda s: None)
        with pytest.raises(LookupFailed):
            client.lookup("http://nowhere.org/")


class TestFixtures:
    """Test fixture storage and recording."""

    def test_sequence_repeats_last(self) -> None:
        store = FixtureStore(entries={"GET http://a.org/": [{"status": 500}, {"status": 200}]})
        assert [store.next_response("GET http://a.org/")["status"] for _ in range(3)] == [
            500, 200, 200,
        ]
        assert store.next_response("GET http://b.org/") is None

    def test_record_save_and_replay(self, tmp_path: Path) -> None:
        upstream = FixtureSession(FixtureStore(entries={
            "GET http://a.org/x": {"status": 200, "text": "hello"},
            "HEAD http://a.org/y": {"status": 301, "headers": {"Location": "/z"}},
            "GET http://a.org/t": {"error": "timeout"},
        }))
        store = FixtureStore()
        recorder = RecordingSession(upstream, store)  # type: ignore[arg-type]

        assert recorder.get("http://a.org/x").text == "hello"
        assert recorder.head("http://a.org/y").status_code == 301
        with pytest.raises(Exception):
            recorder.get("http://a.org/t")

        path = tmp_path / "fixtures.json"
        store.save(path)
        replay = load_session(path)

        assert replay.get("http://a.org/x").text == "hello"
        assert replay.head("http://a.org/y").headers["location"] == "/z"
        with pytest.raises(Exception):
            replay.get("http://a.org/t")

    def test_save_needs_path(self) -> None:
        with pytest.raises(ValueError):
            FixtureStore().save()


def live_session(entries: dict[str, Any]) -> FixtureSession:
    return FixtureSession(FixtureStore(entries={
        request_key(method, url): response for (method, url), response in entries.items()
    }))


class TestLiveChecker:
    """Test live checks."""

    async def test_redirects_followed(self) -> None:
        session = live_session({
            ("HEAD", "http://a.org/old"): {"status": 301, "headers": {"Location": "/new"}},
            ("HEAD", "http://a.org/new"): {"status": 200},
        })
        checker = LiveChecker(FAST, session)
        assert await checker.check("http://a.org/old") == 200

    async def test_get_fallback(self) -> None:
        session = live_session({
            ("HEAD", "http://a.org/x"): {"status": 405},
            ("GET", "http://a.org/x"): {"status": 200},
        })
        checker = LiveChecker(FAST, session)

        assert await checker.check("http://a.org/x") == 200
        assert [method for method, _, _ in checker.request_log] == ["HEAD", "GET"]

    async def test_unreachable(self) -> None:
        checker = LiveChecker(FAST, live_session({}))
        assert await checker.check("http://gone.org/") == UNREACHABLE

    async def test_redirect_depth_bounded(self) -> None:
        session = live_session({
            ("HEAD", "http://a.org/loop"): {"status": 302, "headers": {"Location": "/loop"}},
        })
        config = WeblinkConfig(rate=1000.0, max_redirects=2)
        checker = LiveChecker(config, session)

        assert await checker.check("http://a.org/loop") == UNREACHABLE
        assert len(checker.request_log) == 3

    async def test_redirect_chain_at_depth_limit(self) -> None:
        session = live_session({
            ("HEAD", "http://a.org/1"): {"status": 301, "headers": {"Location": "/2"}},
            ("HEAD", "http://a.org/2"): {"status": 302, "headers": {"Location": "/3"}},
            ("HEAD", "http://a.org/3"): {"status": 204},
        })
        checker = LiveChecker(WeblinkConfig(rate=1000.0, max_redirects=2), session)

        assert await checker.check("http://a.org/1") == 204

    async def test_unexpected_failure_isolated(self) -> None:
        """One URL failing with a non-HTTP error leaves the others checked."""
        class FlakySession(FixtureSession):
            def head(self, url: str, **kwargs: Any) -> Any:
                if "broken" in url:
                    raise RuntimeError("decoder exploded")
                return super().head(url, **kwargs)

        store = FixtureStore(entries={
            request_key("HEAD", "http://a.org/1"): {"status": 200},
            request_key("HEAD", "http://c.org/3"): {"status": 404},
            request_key("GET", "http://c.org/3"): {"status": 404},
        })
        checker = LiveChecker(FAST, FlakySession(store))
        urls = ["http://a.org/1", "http://b.org/broken", "http://c.org/3"]

        assert await checker.check_all(urls) == [200, UNREACHABLE, 404]

    async def test_malformed_status_isolated(self) -> None:
        session = live_session({("HEAD", "http://a.org/x"): {"status": 200}})
        session.store.entries[request_key("HEAD", "http://b.org/y")] = {"status": "teapot"}
        checker = LiveChecker(FAST, session)

        assert await checker.check_all(["http://a.org/x", "http://b.org/y"]) == [200, UNREACHABLE]

    async def test_per_host_rate(self) -> None:
        """Requests to one host are spaced by the politeness delay."""
        urls = [f"http://a.org/{i}" for i in range(3)]
        session = live_session({("HEAD", url): {"status": 200} for url in urls})
        checker = LiveChecker(WeblinkConfig(rate=20.0), session, clock=time.monotonic)

        assert await checker.check_all(urls) == [200, 200, 200]
        times = sorted(t for _, _, t in checker.request_log)
        assert all(b - a >= 0.045 for a, b in zip(times, times[1:]))

    def test_live_check_sync(self) -> None:
        session = live_session({
            ("HEAD", "http://a.org/1"): {"status": 200},
            ("HEAD", "http://b.org/2"): {"status": 404},
            ("GET", "http://b.org/2"): {"status": 404},
        })
        urls = ["http://a.org/1", "http://b.org/2", "http://c.org/3"]
        assert live_check(urls, FAST, session) == [200, 404, UNREACHABLE]


class TestSampling:
    """Test the reservoir sampler."""

    def test_small_streams_kept(self) -> None:
        assert sample_urls(["a", "b"], 5) == ["a", "b"]
        assert sample_urls(["a", "b"], 0) == []

    def test_seeded_and_ordered(self) -> None:
        first = sample_urls(range(1000), 10, seed=3)
        assert first == sample_urls(range(1000), 10, seed=3)
        assert first == sorted(first)
        assert len(set(first)) == 10

    def test_uniform(self) -> None:
        counts = [0] * 10
        for seed in range(2000):
            for item in sample_urls(range(10), 3, seed=seed):
                counts[item] += 1
        assert all(500 < count < 700 for count in counts)


class TestReport:
    """Test audit records and coverage."""

    def test_preservation_predicates(self) -> None:
        assert is_preserved_strict(200)
        assert not is_preserved_strict(302)
        assert [is_preserved_upper(s) for s in (200, 302, 503, 404, None)] == [
            True, True, True, False, False,
        ]

    @pytest.mark.parametrize("kwargs", [
        {"url": "example.org/x"},
        {"url": "ftp://example.org/x"},
        {"url": "http://a.org/", "archive_status": 700},
        {"url": "http://a.org/", "live_status": 42},
        {"url": "http://a.org/", "archive_status": 200, "lookup_failed": True},
    ])
    def test_invalid_audit(self, kwargs: dict[str, Any]) -> None:
        with pytest.raises(ValidationError):
            WeblinkAudit(source_ident="s", **kwargs)

    def test_json_round_trip(self) -> None:
        audit = WeblinkAudit("http://a.org/", "s", 200, 0, "2024-01-01T00:00:00Z")
        assert WeblinkAudit.from_json(audit.to_json()) == audit

    def test_coverage(self) -> None:
        audits = [
            WeblinkAudit("http://a.org/1", "s", archive_status=200, live_status=200),
            WeblinkAudit("http://a.org/2", "s", archive_status=302, live_status=0),
            WeblinkAudit("http://a.org/3", "s", archive_status=404),
            WeblinkAudit("http://a.org/4", "s", archive_status=None),
            WeblinkAudit("http://a.org/5", "s", lookup_failed=True),
        ]

        report = coverage_report(audits)

        assert report.total == 5
        assert report.lookup_failed == 1
        assert report.preserved_strict == 0.25
        assert report.preserved_upper == 0.5
        assert report.live_checked == 2
        assert report.live_ok == 0.5
        assert report.live_unreachable == 1
        assert set(report.to_dict()) == {
            "total", "lookup_failed", "preserved_strict", "preserved_upper",
            "preserved_strict_count", "preserved_upper_count", "live_checked", "live_ok",
            "live_unreachable",
        }

    def test_empty_coverage(self) -> None:
        report = CoverageReport()
        assert report.preserved_strict == 0.0
        assert report.live_ok is None


class TestAudit:
    """Test the end-to-end audit."""

    def test_audit_references(self) -> None:
        refs = [
            reference("s1", 0, url="http://a.org/1"),
            reference("s1", 1, unstructured="again http://a.org/1 and http://b.org/2."),
            reference("s2", 0, url="http://c.org/3"),
        ]
        entries: dict[str, Any] = {
            cdx_key("http://a.org/1"): capture("200"),
            cdx_key("http://b.org/2"): {"status": 200, "text": ""},
            cdx_key("http://c.org/3"): {"status": 503},
            request_key("HEAD", "http://a.org/1"): {"status": 200},
            request_key("HEAD", "http://b.org/2"): {"status": 200},
        }
        session = FixtureSession(FixtureStore(entries=entries))

        audits = audit_references(
            refs, FAST, session=session, live_sample=3, now=lambda: "T", sleep=lambda s: None
        )

        assert [(a.source_ident, a.url) for a in audits] == [
            ("s1", "http://a.org/1"), ("s1", "http://b.org/2"), ("s2", "http://c.org/3"),
        ]
        assert [a.archive_status for a in audits] == [200, None, None]
        assert [a.lookup_failed for a in audits] == [False, False, True]
        assert [a.live_status for a in audits] == [200, 200, UNREACHABLE]
        assert {a.checked_at for a in audits} == {"T"}

    def test_without_live_checks(self) -> None:
        refs = [reference("s", 0, url="http://a.org/1")]
        session = FixtureSession(FixtureStore(entries={cdx_key("http://a.org/1"): capture("404")}))

        [audit] = audit_references(refs, FAST, session=session)

        assert audit.archive_status == 404
        assert audit.live_status is None

    def test_coverage_counts_on_generated_urls(self) -> None:
        """Coverage over 1,000 recorded lookups equals a direct count of the planted answers."""
        rng = random.Random(5)
        answers = ["200", "301", "302", "404", "410", "500", "503", "none", "failed"]
        planted: dict[str, str] = {}
        entries: dict[str, Any] = {}
        refs = []
        for i in range(1000):
            url = f"http://host{i % 37}.org/page/{i}"
            answer = rng.choice(answers)
            planted[url] = answer
            if answer == "none":
                entries[cdx_key(url)] = {"status": 200, "text": ""}
            elif answer == "failed":
                entries[cdx_key(url)] = {"status": 503}
            else:
                entries[cdx_key(url)] = capture(answer)
            refs.append(reference(f"s{i % 50}", i, url=url))
            if i % 10 == 0:
                refs.append(reference(f"s{i % 50}", 5000 + i, unstructured=f"see {url}."))
        session = FixtureSession(FixtureStore(entries=entries))

        audits = audit_references(refs, FAST, session=session, sleep=lambda s: None)
        report = coverage_report(audits)

        values = list(planted.values())
        looked_up = [v for v in values if v != "failed"]
        strict = sum(v == "200" for v in looked_up)
        upper = sum(v in ("200", "301", "302", "500", "503") for v in looked_up)
        assert len(audits) == report.total == 1000
        assert report.lookup_failed == values.count("failed")
        assert report.preserved_strict_count == strict
        assert report.preserved_upper_count == upper
        assert report.preserved_strict == pytest.approx(strict / len(looked_up))
        assert report.preserved_upper == pytest.approx(upper / len(looked_up))
        assert report.live_checked == 0
