"""
Identifier-based matching of references against the catalog.

References and releases are mapped to scheme-prefixed join keys
(``doi:10.1001/x``, ``pmid:123``, ``pmcid:PMC5``, ``arxiv:1703.09380``,
``isbn:978...``), sorted together and joined per key.
"""

import json
import logging
import threading
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, fields
from enum import Enum

from refgraph.config import SortSpec
from refgraph.exceptions import ValidationError
from refgraph.ingest import reference_from_mapping, release_from_mapping
from refgraph.mapreduce import (
    GroupStats,
    SortStats,
    external_sort,
    group_reduce,
    join_fields,
    split_fields,
    take_capped,
)
from refgraph.normalize import (
    normalize_arxiv,
    normalize_doi,
    normalize_isbn,
    normalize_pmcid,
    normalize_pmid,
)
from refgraph.types import (
    BiblioRef,
    MatchReason,
    MatchResult,
    MatchStatus,
    RawReference,
    ReleaseRecord,
)

logger = logging.getLogger(__name__)

DEFAULT_GROUP_CAP = 10_000

SCHEME_REASONS = {
    "doi": MatchReason.DOI,
    "pmid": MatchReason.PMID,
    "pmcid": MatchReason.PMCID,
    "arxiv": MatchReason.ARXIV,
    "isbn": MatchReason.ISBN,
}


class Side(str, Enum):
    """Which input a keyed document comes from."""
    REF = "ref"
    RELEASE = "release"


@dataclass(frozen=True)
class KeyedDoc:
    """
    A join key with the serialized record it was derived from.

    Attributes:
        key: Scheme-prefixed key, e.g. "doi:10.1001/x"
        side: ref or release
        payload: Record JSON
    """
    key: str
    side: Side
    payload: str

    def __post_init__(self) -> None:
        if not self.key or any(ch in self.key for ch in "\t\n\r"):
            raise ValidationError(f"invalid join key {self.key!r}")

    @property
    def scheme(self) -> str:
        return self.key.split(":", 1)[0]

    def to_line(self) -> str:
        return join_fields((self.key, self.side.value, self.payload))

    @classmethod
    def from_fields(cls, key: str, side: str, payload: str) -> "KeyedDoc":
        return cls(key=key, side=Side(side), payload=payload)


@dataclass
class ExactStats:
    """
    Counts of an exact matching pass.

    Attributes:
        groups: Key groups joined
        edges: Edges emitted
        hot_keys: Groups skipped for exceeding the cap
        ambiguous_keys: Keys naming more than one distinct release
        self_citations: Pairs dropped because source equals target
        unkeyed_refs: References without any usable identifier
    """
    groups: int = 0
    edges: int = 0
    hot_keys: int = 0
    ambiguous_keys: int = 0
    self_citations: int = 0
    unkeyed_refs: int = 0

    def merge(self, other: "ExactStats") -> None:
        """Add the counts of another (per-group) tally."""
        for item in fields(self):
            setattr(self, item.name, getattr(self, item.name) + getattr(other, item.name))


def _keys(ids: Iterable[tuple[str, str | None]]) -> list[str]:
    keys = []
    for scheme, raw in ids:
        if not raw:
            continue
        if scheme == "doi":
            ident = normalize_doi(raw)
        elif scheme == "pmid":
            ident = normalize_pmid(raw)
        elif scheme == "pmcid":
            ident = normalize_pmcid(raw)
        elif scheme == "arxiv":
            ident = normalize_arxiv(raw)
        else:
            ident = normalize_isbn(raw)
        if ident is not None:
            # arXiv versions are matched by the fuzzy arxivversion rule.
            keys.append(f"{scheme}:{ident.value}")
    return keys


def ref_keys(ref: RawReference) -> list[str]:
    """Join keys of a reference's identifiers, in scheme order."""
    b = ref.biblio
    return _keys([
        ("doi", b.doi), ("pmid", b.pmid), ("pmcid", b.pmcid), ("arxiv", b.arxiv),
        ("isbn", b.isbn),
    ])


def release_keys(release: ReleaseRecord) -> list[str]:
    """Join keys of a release's identifiers, in scheme order."""
    ids = release.ext_ids
    return _keys([
        ("doi", ids.get("doi")), ("pmid", ids.get("pmid")), ("pmcid", ids.get("pmcid")),
        ("arxiv", ids.get("arxiv")), ("isbn", ids.get("isbn13")),
    ])


def extract_ref_keys(ref: RawReference) -> list[KeyedDoc]:
    """
    One KeyedDoc per identifier of a reference that survives normalization.

    Returns:
        KeyedDocs with side=ref; empty when no identifier is usable
    """
    payload = ref.to_json()
    return [KeyedDoc(key, Side.REF, payload) for key in ref_keys(ref)]


def extract_release_keys(release: ReleaseRecord) -> list[KeyedDoc]:
    """One KeyedDoc per catalog identifier of a release."""
    payload = release.to_json()
    return [KeyedDoc(key, Side.RELEASE, payload) for key in release_keys(release)]


def join_exact(
    group: list[KeyedDoc],
    *,
    cap: int = DEFAULT_GROUP_CAP,
    stats: ExactStats | None = None,
) -> list[BiblioRef]:
    """
    Join all references and releases sharing one key.

    Every (ref, release) pair yields an exact edge whose reason is the key's
    scheme. When the key names several releases, edges to all of them are
    emitted and the key is counted as ambiguous. Self-citations are dropped.

    Args:
        group: Complete set of KeyedDocs for one key
        cap: Largest group joined; larger groups are skipped as hot keys
        stats: Accumulates counts

    Returns:
        Edges in ref order, then target ident order
    """
    stats = stats if stats is not None else ExactStats()
    if not group:
        return []
    key = group[0].key
    if len(group) > cap:
        stats.hot_keys += 1
        logger.warning(f"exact: hot key {key!r} with {len(group)} docs skipped (cap {cap})")
        return []
    stats.groups += 1

    refs: list[RawReference] = []
    releases: dict[str, ReleaseRecord] = {}
    for doc in group:
        data = json.loads(doc.payload)
        if doc.side == Side.REF:
            refs.append(reference_from_mapping(data))
        else:
            release = release_from_mapping(data)
            releases.setdefault(release.ident, release)
    if not refs or not releases:
        return []
    if len(releases) > 1:
        stats.ambiguous_keys += 1
        logger.debug(f"exact: key {key!r} names {len(releases)} releases")

    result = MatchResult(MatchStatus.EXACT, SCHEME_REASONS[group[0].scheme])
    edges = []
    for ref in refs:
        for ident in sorted(releases):
            if ident == ref.source_ident:
                stats.self_citations += 1
                continue
            edges.append(BiblioRef.link(ref, releases[ident], result))
    stats.edges += len(edges)
    return edges


def run_exact(
    refs: Iterable[RawReference],
    releases: Iterable[ReleaseRecord],
    spec: SortSpec,
    *,
    codec: str = "none",
    cap: int = DEFAULT_GROUP_CAP,
    stats: ExactStats | None = None,
    workers: int = 1,
    buffer_bytes: int | None = None,
) -> Iterator[BiblioRef]:
    """
    Stream exact edges for a reference and a release stream.

    Keyed lines of both sides are sorted together by the external sort and
    joined group by group.

    Args:
        refs: References
        releases: Catalog releases
        spec: Sort settings
        codec: Spill run compression
        cap: Hot-key cap
        stats: Accumulates counts
        workers: Threads for the join
        buffer_bytes: Sort buffer override

    Yields:
        Exact edges in key order
    """
    stats = stats if stats is not None else ExactStats()
    group_stats = GroupStats()

    def lines() -> Iterator[str]:
        for ref in refs:
            docs = extract_ref_keys(ref)
            if not docs:
                stats.unkeyed_refs += 1
            for doc in docs:
                yield doc.to_line()
        for release in releases:
            for doc in extract_release_keys(release):
                yield doc.to_line()

    lock = threading.Lock()

    def reducer(key: str, rest: Iterator[str]) -> list[BiblioRef]:
        local = ExactStats()
        try:
            members = take_capped(rest, cap)
            if members is None:
                local.hot_keys += 1
                logger.warning(f"exact: hot key {key!r} skipped (cap {cap})")
                return []
            group = [KeyedDoc.from_fields(key, *split_fields(line)) for line in members]
            return join_exact(group, cap=cap, stats=local)
        finally:
            with lock:
                stats.merge(local)

    sorted_lines = external_sort(
        lines(), spec, codec=codec, stage="exact", buffer_bytes=buffer_bytes,
        stats=SortStats(),
    )
    yield from group_reduce(
        sorted_lines, reducer, stats=group_stats, stage="exact", workers=workers,
        pure=workers > 1, cap=cap,
    )
    if stats.hot_keys:
        logger.warning(f"exact: {stats.hot_keys} hot keys skipped")
    logger.info(
        f"exact: {stats.edges} edges from {stats.groups} groups, "
        f"{stats.ambiguous_keys} ambiguous keys, {stats.unkeyed_refs} refs without identifiers"
    )
