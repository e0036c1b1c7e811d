"""
Core type definitions for refgraph.

This module defines the record types that flow between the pipeline stages.

Key types:
    - ReleaseRecord: A catalogued scholarly work (one release entity)
    - Biblio: The partial bibliographic fields of one citation
    - RawReference: One extracted or publisher-declared citation
    - WikipediaRow: One citation row from a Wikipedia article
    - MatchResult: Verdict of comparing two records
    - BiblioRef: One resolved (or unmatched) citation edge

All records serialize to compact JSON with sorted keys so that reruns over
identical input are byte-identical.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from refgraph.exceptions import ValidationError

__all__ = [
    "EXT_ID_SCHEMES",
    "Biblio",
    "BiblioRef",
    "MatchReason",
    "MatchResult",
    "MatchStatus",
    "RawReference",
    "ReleaseRecord",
    "ReleaseStage",
    "WikipediaRow",
    "dumps",
]

EXT_ID_SCHEMES = ("doi", "pmid", "pmcid", "arxiv", "isbn13", "openlibrary", "wikipedia")


def dumps(data: Any) -> str:
    """Serialize to compact, key-sorted JSON (one line)."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class ReleaseStage(str, Enum):
    """Publication stage of a release."""
    PUBLISHED = "published"
    PREPRINT = "preprint"
    SUBMITTED = "submitted"
    UPDATED = "updated"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value: Any) -> "ReleaseStage":
        """Map free text onto a stage, UNKNOWN when unrecognized."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls(value.strip().lower())
            except ValueError:
                pass
        return cls.UNKNOWN


class MatchStatus(str, Enum):
    """Verdict class of a match."""
    EXACT = "exact"
    STRONG = "strong"
    WEAK = "weak"
    DIFFERENT = "different"
    AMBIGUOUS = "ambiguous"
    UNMATCHED = "unmatched"


class MatchReason(str, Enum):
    """Identifier scheme or verification rule behind a match."""
    # Identifier schemes (exact matching)
    DOI = "doi"
    PMID = "pmid"
    PMCID = "pmcid"
    ARXIV = "arxiv"
    ISBN = "isbn"

    # Verification rules (fuzzy matching)
    BLACKLISTED = "blacklisted"
    TITLEAUTHORMATCH = "titleauthormatch"
    VERSIONEDDOI = "versioneddoi"
    ARXIVVERSION = "arxivversion"
    PMIDDOIPAIR = "pmiddoipair"
    DATACITERELATEDID = "dataciterelatedid"
    YEARCONFLICT = "yearconflict"
    JACCARDAUTHORS = "jaccardauthors"
    TOKENIZEDAUTHORS = "tokenizedauthors"
    SLUGTITLEAUTHORMATCH = "slugtitleauthormatch"
    CONTRIBMISMATCH = "contribmismatch"

    # Unmatched references
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class MatchResult:
    """
    Verdict of comparing two records.

    Attributes:
        status: Verdict class
        reason: Rule that produced the verdict
    """
    status: MatchStatus
    reason: MatchReason

    @property
    def is_match(self) -> bool:
        """True for statuses that produce a citation edge."""
        return self.status in (MatchStatus.EXACT, MatchStatus.STRONG)


@dataclass
class ReleaseRecord:
    """
    A catalogued scholarly work.

    Identifiers in ext_ids are stored in normalized form (see
    refgraph.normalize); arXiv identifiers keep their version suffix.

    Attributes:
        ident: Opaque catalog identifier, unique within a corpus
        title: Work title
        authors: Contributor display names, in order
        year: Publication year (None when absent or out of range)
        release_stage: Publication stage
        ext_ids: Scheme → value for doi, pmid, pmcid, arxiv, isbn13,
            openlibrary, wikipedia
        container_name: Journal or series name
        volume: Volume
        issue: Issue
        pages: Page range
        publisher: Publisher name
        work_ident: Groups releases (versions, editions) of one work
        related_dois: DOIs this record asserts a relation to (e.g. DataCite
            IsVersionOf / IsIdenticalTo)
    """
    ident: str
    title: str | None = None
    authors: list[str] = field(default_factory=list)
    year: int | None = None
    release_stage: ReleaseStage = ReleaseStage.UNKNOWN
    ext_ids: dict[str, str] = field(default_factory=dict)
    container_name: str | None = None
    volume: str | None = None
    issue: str | None = None
    pages: str | None = None
    publisher: str | None = None
    work_ident: str | None = None
    related_dois: list[str] = field(default_factory=list)

    @property
    def doi(self) -> str | None:
        return self.ext_ids.get("doi")

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON shape accepted by refgraph.ingest.parse_release."""
        data: dict[str, Any] = {
            "ident": self.ident,
            "release_stage": self.release_stage.value,
        }
        for name in ("title", "year", "container_name", "volume", "issue", "pages",
                     "publisher", "work_ident"):
            value = getattr(self, name)
            if value is not None:
                data[name] = value
        if self.authors:
            data["authors"] = list(self.authors)
        if self.ext_ids:
            data["ext_ids"] = dict(self.ext_ids)
        if self.related_dois:
            data["related_dois"] = list(self.related_dois)
        return data

    def to_json(self) -> str:
        """Serialize to one JSON line."""
        return dumps(self.to_dict())


BIBLIO_FIELDS = (
    "unstructured", "title", "authors", "year", "doi", "pmid", "pmcid", "arxiv",
    "isbn", "url", "container_name", "volume", "pages",
)


@dataclass
class Biblio:
    """
    Partial bibliographic fields of one citation. Any field may be missing.

    Identifier fields hold normalized values (isbn is ISBN-13).
    """
    unstructured: str | None = None
    title: str | None = None
    authors: list[str] = field(default_factory=list)
    year: int | None = None
    doi: str | None = None
    pmid: str | None = None
    pmcid: str | None = None
    arxiv: str | None = None
    isbn: str | None = None
    url: str | None = None
    container_name: str | None = None
    volume: str | None = None
    pages: str | None = None

    def is_empty(self) -> bool:
        """True when no field carries a value."""
        return not any(getattr(self, name) for name in BIBLIO_FIELDS)

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {}
        for name in BIBLIO_FIELDS:
            value = getattr(self, name)
            if value:
                data[name] = list(value) if name == "authors" else value
        return data


@dataclass
class RawReference:
    """
    One extracted or declared citation from a source work.

    Attributes:
        source_ident: Catalog identifier of the citing work
        ref_index: 0-based position in the source's reference list
        provenance: Origin of the reference (crossref, grobid, wikipedia, ...)
        biblio: Partial bibliographic fields
        source_year: Publication year of the citing work, when known
        source_release_stage: Stage of the citing work, when known
        source_doi: DOI of the citing work, when known
    """
    source_ident: str
    ref_index: int
    provenance: str
    biblio: Biblio
    source_year: int | None = None
    source_release_stage: ReleaseStage | None = None
    source_doi: str | None = None

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON shape accepted by refgraph.ingest.parse_raw_reference."""
        data: dict[str, Any] = {
            "source_ident": self.source_ident,
            "index": self.ref_index,
            "provenance": self.provenance,
            "biblio": self.biblio.to_dict(),
        }
        if self.source_year is not None:
            data["source_year"] = self.source_year
        if self.source_release_stage is not None:
            data["source_release_stage"] = self.source_release_stage.value
        if self.source_doi is not None:
            data["source_doi"] = self.source_doi
        return data

    def to_json(self) -> str:
        return dumps(self.to_dict())


@dataclass
class WikipediaRow:
    """
    One citation from an English Wikipedia article.

    Attributes:
        article_title: Article title as published in the ingested dataset
        cited: Partial bibliographic fields of the cited work
    """
    article_title: str
    cited: Biblio

    def to_json(self) -> str:
        return dumps({"article_title": self.article_title, "cited": self.cited.to_dict()})


@dataclass
class BiblioRef:
    """
    One citation edge of the output graph (a "biblioref").

    Unmatched references are kept as edges without a target so the final
    file serves both matched and unmatched references.

    Attributes:
        source_ident: Citing work
        target_ident: Cited work (None when unmatched)
        ref_index: Position of the reference in the source's list
        match_status: exact, strong or unmatched
        match_reason: Identifier scheme or verification rule
        provenance: Origin of the reference
        source_year: Year of the citing work
        target_year: Year of the cited work
        source_release_stage: Stage of the citing work
        source_doi: DOI of the citing work
        target_doi: DOI of the cited work
    """
    source_ident: str
    target_ident: str | None
    ref_index: int
    match_status: MatchStatus
    match_reason: MatchReason
    provenance: str
    source_year: int | None = None
    target_year: int | None = None
    source_release_stage: ReleaseStage | None = None
    source_doi: str | None = None
    target_doi: str | None = None

    def __post_init__(self) -> None:
        unmatched = self.match_status == MatchStatus.UNMATCHED
        if unmatched != (self.target_ident is None):
            raise ValidationError(
                f"edge {self.edge_key}: status {self.match_status.value} "
                f"with target {self.target_ident!r}"
            )
        if self.target_ident is not None and self.target_ident == self.source_ident:
            raise ValidationError(f"edge {self.edge_key} cites itself")

    @property
    def edge_key(self) -> str:
        """Stable per-reference key: source_ident + "_" + ref_index."""
        return f"{self.source_ident}_{self.ref_index}"

    @property
    def is_matched(self) -> bool:
        return self.match_status != MatchStatus.UNMATCHED

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "edge_key": self.edge_key,
            "source_ident": self.source_ident,
            "ref_index": self.ref_index,
            "match_status": self.match_status.value,
            "match_reason": self.match_reason.value,
            "provenance": self.provenance,
        }
        optional = {
            "target_ident": self.target_ident,
            "source_year": self.source_year,
            "target_year": self.target_year,
            "source_release_stage": (
                self.source_release_stage.value if self.source_release_stage else None
            ),
            "source_doi": self.source_doi,
            "target_doi": self.target_doi,
        }
        data.update({k: v for k, v in optional.items() if v is not None})
        return data

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BiblioRef":
        """Rebuild an edge from its to_dict() form."""
        stage = data.get("source_release_stage")
        return cls(
            source_ident=data["source_ident"],
            target_ident=data.get("target_ident"),
            ref_index=int(data["ref_index"]),
            match_status=MatchStatus(data["match_status"]),
            match_reason=MatchReason(data["match_reason"]),
            provenance=data["provenance"],
            source_year=data.get("source_year"),
            target_year=data.get("target_year"),
            source_release_stage=ReleaseStage(stage) if stage else None,
            source_doi=data.get("source_doi"),
            target_doi=data.get("target_doi"),
        )

    @classmethod
    def from_json(cls, line: str) -> "BiblioRef":
        return cls.from_dict(json.loads(line))

    @classmethod
    def unmatched(cls, ref: RawReference) -> "BiblioRef":
        """The placeholder edge for a reference without a verified target."""
        return cls(
            source_ident=ref.source_ident,
            target_ident=None,
            ref_index=ref.ref_index,
            match_status=MatchStatus.UNMATCHED,
            match_reason=MatchReason.UNKNOWN,
            provenance=ref.provenance,
            source_year=ref.source_year,
            source_release_stage=ref.source_release_stage,
            source_doi=ref.source_doi,
        )

    @classmethod
    def link(
        cls,
        ref: RawReference,
        target: ReleaseRecord,
        result: MatchResult,
        *,
        target_ident: str | None = None,
    ) -> "BiblioRef":
        """Edge from a reference to a verified or identifier-matched release."""
        return cls(
            source_ident=ref.source_ident,
            target_ident=target_ident or target.ident,
            ref_index=ref.ref_index,
            match_status=result.status,
            match_reason=result.reason,
            provenance=ref.provenance,
            source_year=ref.source_year,
            target_year=target.year,
            source_release_stage=ref.source_release_stage,
            source_doi=ref.source_doi,
            target_doi=target.doi,
        )
