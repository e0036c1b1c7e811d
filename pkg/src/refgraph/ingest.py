"""
Parsing of newline-delimited JSON inputs into canonical records.

Inputs come from many aggregators and extraction tools, so field names and
field combinations vary wildly. Every line is either accepted or rejected
with a counted reason; a bad line never aborts a stream.

Field synonyms are resolved through fixed alias tables:

    release:   id, release_ident → ident; release_year → year;
               contribs[].raw_name / creators → authors;
               container / journal → container_name
    reference: release_ident → source_ident; ref_index / key_index → index;
               source / ref_source → provenance; release_year → source_year;
               release_stage → source_release_stage
    biblio:    raw / raw_citation / unstructured_citation → unstructured;
               article_title / article-title → title;
               contrib_raw_names / creators → authors; date / issued → year;
               arxiv_id → arxiv; isbn10 / isbn13 / isbn_13 → isbn;
               journal / journal-title / container → container_name;
               page / first_page → pages; link → url
"""

import datetime
import json
import logging
import re
from collections import Counter
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from typing import Any, TypeVar

from refgraph.exceptions import RecordRejected
from refgraph.normalize import (
    normalize_arxiv,
    normalize_doi,
    normalize_isbn,
    normalize_pmcid,
    normalize_pmid,
)
from refgraph.types import (
    Biblio,
    RawReference,
    ReleaseRecord,
    ReleaseStage,
    WikipediaRow,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

MIN_YEAR = 1500

RELEASE_ALIASES = {
    "ident": "ident",
    "id": "ident",
    "release_ident": "ident",
    "title": "title",
    "authors": "authors",
    "contribs": "authors",
    "creators": "authors",
    "year": "year",
    "release_year": "year",
    "release_stage": "release_stage",
    "stage": "release_stage",
    "ext_ids": "ext_ids",
    "container_name": "container_name",
    "container": "container_name",
    "journal": "container_name",
    "volume": "volume",
    "issue": "issue",
    "pages": "pages",
    "publisher": "publisher",
    "work_ident": "work_ident",
    "work_id": "work_ident",
    "related_dois": "related_dois",
}

EXT_ID_ALIASES = {
    "doi": "doi",
    "pmid": "pmid",
    "pmcid": "pmcid",
    "arxiv": "arxiv",
    "arxiv_id": "arxiv",
    "isbn13": "isbn13",
    "isbn": "isbn13",
    "isbn10": "isbn13",
    "openlibrary": "openlibrary",
    "olid": "openlibrary",
    "wikipedia": "wikipedia",
}

REFERENCE_ALIASES = {
    "source_ident": "source_ident",
    "release_ident": "source_ident",
    "index": "index",
    "ref_index": "index",
    "key_index": "index",
    "provenance": "provenance",
    "source": "provenance",
    "ref_source": "provenance",
    "biblio": "biblio",
    "source_year": "source_year",
    "release_year": "source_year",
    "source_release_stage": "source_release_stage",
    "release_stage": "source_release_stage",
    "source_doi": "source_doi",
    "release_doi": "source_doi",
}

BIBLIO_ALIASES = {
    "unstructured": "unstructured",
    "raw": "unstructured",
    "raw_citation": "unstructured",
    "unstructured_citation": "unstructured",
    "title": "title",
    "article_title": "title",
    "article-title": "title",
    "authors": "authors",
    "contrib_raw_names": "authors",
    "creators": "authors",
    "year": "year",
    "date": "year",
    "issued": "year",
    "doi": "doi",
    "pmid": "pmid",
    "pmcid": "pmcid",
    "arxiv": "arxiv",
    "arxiv_id": "arxiv",
    "isbn": "isbn",
    "isbn10": "isbn",
    "isbn13": "isbn",
    "isbn_13": "isbn",
    "url": "url",
    "link": "url",
    "container_name": "container_name",
    "journal": "container_name",
    "journal-title": "container_name",
    "container": "container_name",
    "volume": "volume",
    "pages": "pages",
    "page": "pages",
    "first_page": "pages",
}

_YEAR_RE = re.compile(r"(?<![0-9])([0-9]{4})(?![0-9])")


@dataclass
class IngestStats:
    """
    Line accounting of one parsed stream.

    Attributes:
        total: Lines seen
        accepted: Lines parsed into records
        rejected: Lines rejected
        reasons: Rejection counts by reason
    """
    total: int = 0
    accepted: int = 0
    rejected: int = 0
    reasons: Counter = field(default_factory=Counter)

    def reject(self, reason: str) -> None:
        self.rejected += 1
        self.reasons[reason] += 1


# --- helpers ---

def _load_object(line: str | bytes) -> dict[str, Any]:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as e:
            raise RecordRejected("bad-encoding", str(e)) from e
    if not line.strip():
        raise RecordRejected("empty-line")
    try:
        data = json.loads(line)
    except (ValueError, RecursionError) as e:
        raise RecordRejected("malformed-json", str(e)) from e
    if not isinstance(data, dict):
        raise RecordRejected("not-an-object")
    return data


def _resolve(data: dict[str, Any], aliases: dict[str, str]) -> dict[str, Any]:
    """Map aliased keys to canonical names; the first non-empty value wins."""
    resolved: dict[str, Any] = {}
    for key, value in data.items():
        canonical = aliases.get(key)
        if canonical is None or value in (None, "", [], {}):
            continue
        resolved.setdefault(canonical, value)
    return resolved


def _text(value: Any) -> str | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int | float):
        return str(value)
    if isinstance(value, str):
        value = " ".join(value.split())
        return value or None
    return None


def _year(value: Any) -> int | None:
    """Extract a plausible year; out-of-range years are treated as absent."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        year = value
    elif isinstance(value, str):
        match = _YEAR_RE.search(value)
        if not match:
            return None
        year = int(match.group(1))
    else:
        return None
    if MIN_YEAR <= year <= datetime.date.today().year + 2:
        return year
    return None


def _contrib_name(item: dict[str, Any]) -> str | None:
    for key in ("raw_name", "name"):
        text = _text(item.get(key))
        if text:
            return text
    parts = [_text(item.get(key)) for key in ("given_name", "surname")]
    return " ".join(part for part in parts if part) or None


def _names(value: Any) -> list[str]:
    """Contributor names from strings or contrib objects; other shapes are skipped."""
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list):
        return []
    names = []
    for item in value:
        text = _contrib_name(item) if isinstance(item, dict) else _text(item)
        if text:
            names.append(text)
    return names


def _first(value: Any) -> Any:
    """First element of a list-valued field."""
    if isinstance(value, list):
        return value[0] if value else None
    return value


def _normalized_ids(raw_ids: dict[str, Any]) -> dict[str, str]:
    ext_ids: dict[str, str] = {}
    for key, value in raw_ids.items():
        scheme = EXT_ID_ALIASES.get(key)
        if scheme is None or scheme in ext_ids:
            continue
        value = _first(value)
        normalized: str | None
        if scheme == "doi":
            ident = normalize_doi(value)
            normalized = ident.canonical if ident else None
        elif scheme == "pmid":
            ident = normalize_pmid(value)
            normalized = ident.canonical if ident else None
        elif scheme == "pmcid":
            ident = normalize_pmcid(value)
            normalized = ident.canonical if ident else None
        elif scheme == "arxiv":
            ident = normalize_arxiv(value)
            normalized = ident.canonical if ident else None
        elif scheme == "isbn13":
            ident = normalize_isbn(value)
            normalized = ident.canonical if ident else None
        else:
            normalized = _text(value)
        if normalized:
            ext_ids[scheme] = normalized
        elif isinstance(value, str):
            logger.debug(f"dropping unparseable {scheme} identifier {value!r}")
        else:
            logger.debug(f"dropping {scheme} identifier of type {type(value).__name__}")
    return ext_ids


# --- releases ---

def release_from_mapping(data: dict[str, Any], *, require_ident: bool = True) -> ReleaseRecord:
    """
    Build a ReleaseRecord from a parsed JSON object.

    Args:
        data: Parsed object (aliases allowed, unknown fields ignored)
        require_ident: Reject objects without ident; when False an empty
            ident is allowed (labeled verification pairs)

    Raises:
        RecordRejected: If ident is missing and required
    """
    fields_ = _resolve(data, RELEASE_ALIASES)
    ident = _text(fields_.get("ident"))
    if not ident:
        if require_ident:
            raise RecordRejected("missing-ident")
        ident = ""

    raw_ids = fields_.get("ext_ids") or {}
    if not isinstance(raw_ids, dict):
        raw_ids = {}
    # Top-level identifier fields are accepted as a convenience.
    for key in EXT_ID_ALIASES:
        if key in data and key not in raw_ids:
            raw_ids = {**raw_ids, key: data[key]}

    related = _as_list(fields_.get("related_dois"))
    related_dois = sorted({
        d.canonical for d in (normalize_doi(v) for v in related if isinstance(v, str)) if d
    })

    return ReleaseRecord(
        ident=ident,
        title=_text(fields_.get("title")),
        authors=_names(fields_.get("authors")),
        year=_year(fields_.get("year")),
        release_stage=ReleaseStage.parse(fields_.get("release_stage")),
        ext_ids=_normalized_ids(raw_ids),
        container_name=_text(fields_.get("container_name")),
        volume=_text(fields_.get("volume")),
        issue=_text(fields_.get("issue")),
        pages=_text(fields_.get("pages")),
        publisher=_text(fields_.get("publisher")),
        work_ident=_text(fields_.get("work_ident")),
        related_dois=related_dois,
    )


def parse_release(line: str | bytes) -> ReleaseRecord:
    """
    Parse one catalog release line.

    Identifiers are normalized before storage; unknown fields are ignored;
    years outside [1500, current year + 2] are dropped.

    Raises:
        RecordRejected: On malformed JSON or a missing ident
    """
    return release_from_mapping(_load_object(line))


# --- references ---

def biblio_from_mapping(data: dict[str, Any]) -> Biblio:
    """Build a Biblio from a parsed object; identifiers that fail normalization are dropped."""
    fields_ = _resolve(data, BIBLIO_ALIASES)

    def ident(value: Any, normalizer: Callable[[Any], Any]) -> str | None:
        normalized = normalizer(_first(value)) if value is not None else None
        return normalized.canonical if normalized else None

    return Biblio(
        unstructured=_text(fields_.get("unstructured")),
        title=_text(fields_.get("title")),
        authors=_names(fields_.get("authors")),
        year=_year(fields_.get("year")),
        doi=ident(fields_.get("doi"), normalize_doi),
        pmid=ident(fields_.get("pmid"), normalize_pmid),
        pmcid=ident(fields_.get("pmcid"), normalize_pmcid),
        arxiv=ident(fields_.get("arxiv"), normalize_arxiv),
        isbn=ident(fields_.get("isbn"), normalize_isbn),
        url=_text(fields_.get("url")),
        container_name=_text(fields_.get("container_name")),
        volume=_text(fields_.get("volume")),
        pages=_text(fields_.get("pages")),
    )


class RefIndexAssigner:
    """
    Numbers references that arrive without an explicit index.

    Indexes are assigned per source in order of appearance, continuing after
    the largest explicit index seen so far for that source and skipping any
    index already taken. An explicit index that is already taken, whether
    explicitly or by assignment, is rejected as a duplicate.
    """

    def __init__(self) -> None:
        self._next: dict[str, int] = {}
        self._used: dict[str, set[int]] = {}

    def observe(self, source_ident: str, index: int) -> None:
        """
        Record an explicit index.

        Raises:
            RecordRejected: If the index is already taken for this source
        """
        used = self._used.setdefault(source_ident, set())
        if index in used:
            raise RecordRejected("duplicate-index", f"{source_ident}#{index}")
        used.add(index)
        self._next[source_ident] = max(self._next.get(source_ident, 0), index + 1)

    def assign(self, source_ident: str) -> int:
        used = self._used.setdefault(source_ident, set())
        index = self._next.get(source_ident, 0)
        while index in used:
            index += 1
        used.add(index)
        self._next[source_ident] = index + 1
        return index


_INDEX_RE = re.compile(r"[0-9]+")


def _index(value: Any) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value if value >= 0 else None
    if isinstance(value, str) and _INDEX_RE.fullmatch(value.strip()):
        return int(value.strip())
    return None


def reference_from_mapping(
    data: dict[str, Any], assigner: RefIndexAssigner | None = None
) -> RawReference:
    """
    Build a RawReference from a parsed object.

    Raises:
        RecordRejected: If source_ident is missing, the biblio carries no
            usable field, or the index is missing and no assigner is given
    """
    fields_ = _resolve(data, REFERENCE_ALIASES)
    source_ident = _text(fields_.get("source_ident"))
    if not source_ident:
        raise RecordRejected("missing-source-ident")

    raw_biblio = fields_.get("biblio")
    if not isinstance(raw_biblio, dict):
        raise RecordRejected("missing-biblio")
    biblio = biblio_from_mapping(raw_biblio)
    if biblio.is_empty():
        raise RecordRejected("empty-biblio")

    index = _index(fields_.get("index"))
    if index is None:
        if "index" in fields_:
            raise RecordRejected("bad-index", repr(fields_.get("index")))
        if assigner is None:
            raise RecordRejected("missing-index")
        index = assigner.assign(source_ident)
    elif assigner is not None:
        assigner.observe(source_ident, index)

    stage = fields_.get("source_release_stage")
    source_doi = normalize_doi(_text(fields_.get("source_doi")))
    return RawReference(
        source_ident=source_ident,
        ref_index=index,
        provenance=_text(fields_.get("provenance")) or "unknown",
        biblio=biblio,
        source_year=_year(fields_.get("source_year")),
        source_release_stage=ReleaseStage.parse(stage) if stage else None,
        source_doi=source_doi.canonical if source_doi else None,
    )


def parse_raw_reference(
    line: str | bytes, assigner: RefIndexAssigner | None = None
) -> RawReference:
    """
    Parse one raw reference line.

    Args:
        line: One JSON object
        assigner: Numbers references without an explicit index; required
            for such lines

    Raises:
        RecordRejected: On malformed JSON, missing source, empty biblio
    """
    return reference_from_mapping(_load_object(line), assigner)


# --- extension inputs ---

def parse_wikipedia_row(line: str | bytes) -> WikipediaRow:
    """
    Parse one pre-extracted Wikipedia citation row.

    The cited work may be nested under "cited" / "biblio" or given as
    top-level fields; an "id_list" mapping contributes identifiers.

    Raises:
        RecordRejected: If the article title is missing or nothing is cited
    """
    data = _load_object(line)
    title = _text(data.get("article_title") or data.get("page_title"))
    if not title:
        raise RecordRejected("missing-article-title")
    cited = data.get("cited") or data.get("biblio")
    if not isinstance(cited, dict):
        cited = {k: v for k, v in data.items() if k in BIBLIO_ALIASES}
    id_list = data.get("id_list")
    if isinstance(id_list, dict):
        cited = {**{k.lower(): v for k, v in id_list.items()}, **cited}
    biblio = biblio_from_mapping(cited)
    if biblio.is_empty():
        raise RecordRejected("empty-biblio")
    return WikipediaRow(article_title=title, cited=biblio)


def _as_list(value: Any) -> list[Any]:
    """A list field; a scalar counts as a one-element list, other shapes as empty."""
    if isinstance(value, list):
        return value
    if value is None or isinstance(value, dict):
        return []
    return [value]


def _ol_key(value: Any) -> str | None:
    text = _text(value)
    return text.rsplit("/", 1)[-1] if text else None


def parse_openlibrary_edition(line: str | bytes) -> ReleaseRecord:
    """
    Parse one Open Library edition into a release-shaped record.

    Expects the edition shape (key, title, subtitle, authors, isbn_13,
    isbn_10, publish_date, works). The ident is the edition id (OL...M).

    Raises:
        RecordRejected: If the edition key is missing
    """
    data = _load_object(line)
    ident = _ol_key(data.get("key"))
    if not ident:
        raise RecordRejected("missing-ident")

    isbn = None
    for value in [*_as_list(data.get("isbn_13")), *_as_list(data.get("isbn_10"))]:
        normalized = normalize_isbn(value) if isinstance(value, str) else None
        if normalized:
            isbn = normalized.canonical
            break

    title = _text(data.get("title"))
    subtitle = _text(data.get("subtitle"))
    if title and subtitle:
        title = f"{title}: {subtitle}"

    work = None
    for entry in _as_list(data.get("works"))[:1]:
        if isinstance(entry, dict):
            work = _ol_key(entry.get("key"))

    ext_ids = {"openlibrary": ident}
    if isbn:
        ext_ids["isbn13"] = isbn
    publishers = _as_list(data.get("publishers"))
    return ReleaseRecord(
        ident=ident,
        title=title,
        authors=_names(data.get("authors") or data.get("by_statement")),
        year=_year(data.get("publish_date")),
        release_stage=ReleaseStage.PUBLISHED,
        ext_ids=ext_ids,
        publisher=_text(publishers[0]) if publishers else None,
        work_ident=work,
    )


# --- streams ---

def read_records(
    lines: Iterable[str | bytes],
    parser: Callable[[str | bytes], T],
    stats: IngestStats | None = None,
) -> Iterator[T]:
    """
    Parse a line stream, counting rejects instead of raising.

    Args:
        lines: Input lines (str or bytes)
        parser: One of the parse_* functions
        stats: Accumulates accepted/rejected counts

    Yields:
        Accepted records, in input order
    """
    stats = stats if stats is not None else IngestStats()
    for number, line in enumerate(lines, start=1):
        stats.total += 1
        try:
            record = parser(line)
        except RecordRejected as e:
            stats.reject(e.reason)
            logger.debug(f"line {number} rejected: {e}")
            continue
        except (TypeError, ValueError, AttributeError, KeyError, IndexError) as e:
            # A field shape no parser rule anticipated; count it, keep streaming.
            stats.reject("invalid-record")
            logger.warning(f"line {number} rejected: {type(e).__name__}: {e}")
            continue
        stats.accepted += 1
        yield record


def read_raw_references(
    lines: Iterable[str | bytes], stats: IngestStats | None = None
) -> Iterator[RawReference]:
    """Parse raw references, numbering index-less references per source."""
    assigner = RefIndexAssigner()
    yield from read_records(lines, lambda line: parse_raw_reference(line, assigner), stats)
