"""
Edges beyond paper-to-paper citations.

Wikipedia articles citing catalog works (source-wikipedia) and works citing
Open Library book editions (target-open-library) are matched with the same
identifier join and verifier as core references. Endpoints are
scheme-qualified: ``wikipedia:Article_Title``, ``openlibrary:OL123M``.
"""

import dataclasses
import json
import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from refgraph.config import SortSpec, VerifyConfig
from refgraph.exactmatch import (
    DEFAULT_GROUP_CAP,
    KeyedDoc,
    Side,
    join_exact,
    ref_keys,
    release_keys,
)
from refgraph.exceptions import ValidationError
from refgraph.fuzzy import DEFAULT_VERIFY, candidate_key, match_group
from refgraph.ingest import RefIndexAssigner, reference_from_mapping, release_from_mapping
from refgraph.mapreduce import (
    GroupStats,
    external_sort,
    group_reduce,
    join_fields,
    split_fields,
    take_capped,
)
from refgraph.types import BiblioRef, RawReference, ReleaseRecord, WikipediaRow, dumps

logger = logging.getLogger(__name__)

WIKIPEDIA_PREFIX = "wikipedia:"
OPENLIBRARY_PREFIX = "openlibrary:"


class EdgeType(str, Enum):
    """Kind of citation edge by endpoint schemes."""
    DOI_DOI = "doi-doi"
    TARGET_OPEN_LIBRARY = "target-open-library"
    SOURCE_WIKIPEDIA = "source-wikipedia"
    TARGET_URL = "target-url"


@dataclass
class TypedEdge:
    """
    A BiblioRef labeled with its edge type.

    Attributes:
        edge_type: Kind of edge
        bref: The edge with scheme-qualified endpoints
        target_work: Work grouping the target (Open Library work), when known
    """
    edge_type: EdgeType
    bref: BiblioRef
    target_work: str | None = None

    def __post_init__(self) -> None:
        if classify_edge(self.bref) != self.edge_type:
            raise ValidationError(
                f"edge {self.bref.edge_key} is not {self.edge_type.value}: "
                f"{self.bref.source_ident} -> {self.bref.target_ident}"
            )

    def to_dict(self) -> dict[str, Any]:
        data = {"edge_type": self.edge_type.value, **self.bref.to_dict()}
        if self.target_work:
            data["target_work"] = self.target_work
        return data

    def to_json(self) -> str:
        return dumps(self.to_dict())


def classify_edge(bref: BiblioRef) -> EdgeType | None:
    """
    Edge type of a matched BiblioRef.

    Returns:
        The type, or None for unmatched rows and work-work edges lacking DOIs
    """
    if not bref.is_matched or bref.target_ident is None:
        return None
    if bref.source_ident.startswith(WIKIPEDIA_PREFIX):
        return EdgeType.SOURCE_WIKIPEDIA
    if bref.target_ident.startswith(OPENLIBRARY_PREFIX):
        return EdgeType.TARGET_OPEN_LIBRARY
    if bref.target_ident.startswith(("http://", "https://")):
        return EdgeType.TARGET_URL
    if bref.source_doi and bref.target_doi:
        return EdgeType.DOI_DOI
    return None


def wikipedia_ident(article_title: str) -> str:
    """Scheme-qualified source ident of a Wikipedia article."""
    return WIKIPEDIA_PREFIX + "_".join(article_title.split())


@dataclass
class ExtensionStats:
    """
    Counts of an extension matching pass.

    Attributes:
        inputs: Rows or references seen
        skipped: Inputs without a title or a usable identifier
        edges: Edges emitted
        by_status: Edges by match status
    """
    inputs: int = 0
    skipped: int = 0
    edges: int = 0
    by_status: Counter = field(default_factory=Counter)


def _match(
    refs: Iterable[RawReference],
    targets: Iterable[ReleaseRecord],
    *,
    schemes: tuple[str, ...],
    fuzzy_identified: bool,
    spec: SortSpec,
    config: VerifyConfig,
    codec: str,
    cap: int,
    stage: str,
    stats: ExtensionStats,
    buffer_bytes: int | None,
) -> Iterator[tuple[BiblioRef, dict[str, str | None]]]:
    """Join refs against targets on identifier and slug keys in one sort pass."""

    def id_keys(keys: list[str]) -> list[str]:
        return [f"id|{k}" for k in keys if k.split(":", 1)[0] in schemes]

    def lines() -> Iterator[str]:
        for ref in refs:
            stats.inputs += 1
            keys = id_keys(ref_keys(ref))
            slug = candidate_key(ref, config.slug_min_length)
            if slug and (fuzzy_identified or not keys):
                keys.append(f"slug|{slug}")
            if not keys:
                stats.skipped += 1
                continue
            payload = ref.to_json()
            for key in keys:
                yield join_fields((key, Side.REF.value, payload))
        for target in targets:
            keys = id_keys(release_keys(target))
            slug = candidate_key(target, config.slug_min_length)
            if slug:
                keys.append(f"slug|{slug}")
            payload = target.to_json()
            for key in keys:
                yield join_fields((key, Side.RELEASE.value, payload))

    def reducer(key: str, rest: Iterator[str]) -> list[tuple[BiblioRef, dict[str, str | None]]]:
        members = take_capped(rest, cap)
        if members is None:
            logger.warning(f"{stage}: hot key {key!r} skipped (cap {cap})")
            return []
        kind, _, real_key = key.partition("|")
        docs = [KeyedDoc.from_fields(real_key, *split_fields(line)) for line in members]
        releases = [
            release_from_mapping(json.loads(doc.payload))
            for doc in docs if doc.side == Side.RELEASE
        ]
        if not releases or len(releases) == len(docs):
            return []
        works = {release.ident: release.work_ident for release in releases}
        if kind == "id":
            edges = join_exact(docs, cap=cap)
        else:
            group: list[RawReference | ReleaseRecord] = [
                reference_from_mapping(json.loads(doc.payload))
                for doc in docs if doc.side == Side.REF
            ]
            edges = match_group([*group, *releases], config=config, cap=cap)
        return [(edge, works) for edge in edges]

    sorted_lines = external_sort(
        lines(), spec, codec=codec, stage=stage, buffer_bytes=buffer_bytes
    )
    yield from group_reduce(sorted_lines, reducer, stats=GroupStats(), stage=stage)


def match_wikipedia(
    rows: Iterable[WikipediaRow],
    catalog: Iterable[ReleaseRecord],
    spec: SortSpec,
    *,
    config: VerifyConfig = DEFAULT_VERIFY,
    codec: str = "none",
    cap: int = DEFAULT_GROUP_CAP,
    stats: ExtensionStats | None = None,
    buffer_bytes: int | None = None,
) -> Iterator[TypedEdge]:
    """
    Match Wikipedia citation rows against the catalog.

    Rows with a DOI or PMID are joined on those identifiers; rows without
    are verified against slug candidates. Rows with neither a title nor an
    identifier are skipped and counted.

    Yields:
        source-wikipedia edges (exact and strong only)
    """
    stats = stats if stats is not None else ExtensionStats()
    assigner = RefIndexAssigner()

    def refs() -> Iterator[RawReference]:
        for row in rows:
            source = wikipedia_ident(row.article_title)
            yield RawReference(
                source_ident=source,
                ref_index=assigner.assign(source),
                provenance="wikipedia",
                biblio=row.cited,
            )

    for bref, _ in _match(
        refs(), catalog, schemes=("doi", "pmid"), fuzzy_identified=False, spec=spec,
        config=config, codec=codec, cap=cap, stage="wikipedia", stats=stats,
        buffer_bytes=buffer_bytes,
    ):
        stats.edges += 1
        stats.by_status[bref.match_status.value] += 1
        yield TypedEdge(EdgeType.SOURCE_WIKIPEDIA, bref)
    logger.info(
        f"wikipedia: {stats.edges} edges from {stats.inputs} rows, {stats.skipped} skipped"
    )


def match_openlibrary(
    refs: Iterable[RawReference],
    editions: Iterable[ReleaseRecord],
    spec: SortSpec,
    *,
    config: VerifyConfig = DEFAULT_VERIFY,
    codec: str = "none",
    cap: int = DEFAULT_GROUP_CAP,
    stats: ExtensionStats | None = None,
    buffer_bytes: int | None = None,
) -> Iterator[TypedEdge]:
    """
    Match references against Open Library editions.

    ISBNs are joined exactly; every titled reference is also verified
    against editions sharing its slug. Edges are per edition; target_work
    carries the edition's work for per-work collapsing.

    Yields:
        target-open-library edges (exact and strong only)
    """
    stats = stats if stats is not None else ExtensionStats()
    for bref, works in _match(
        refs, editions, schemes=("isbn",), fuzzy_identified=True, spec=spec,
        config=config, codec=codec, cap=cap, stage="openlibrary", stats=stats,
        buffer_bytes=buffer_bytes,
    ):
        edition = bref.target_ident or ""
        work = works.get(edition)
        bref = dataclasses.replace(bref, target_ident=OPENLIBRARY_PREFIX + edition)
        stats.edges += 1
        stats.by_status[bref.match_status.value] += 1
        yield TypedEdge(
            EdgeType.TARGET_OPEN_LIBRARY,
            bref,
            target_work=OPENLIBRARY_PREFIX + work if work else None,
        )
    logger.info(
        f"openlibrary: {stats.edges} edges from {stats.inputs} refs, {stats.skipped} skipped"
    )


def typed_edges(brefs: Iterable[BiblioRef]) -> Iterator[TypedEdge]:
    """Typed view of fused rows; rows without a type are skipped."""
    for bref in brefs:
        edge_type = classify_edge(bref)
        if edge_type is not None:
            yield TypedEdge(edge_type, bref)


EDGE_TYPE_ROWS = (EdgeType.DOI_DOI, EdgeType.TARGET_OPEN_LIBRARY, EdgeType.SOURCE_WIKIPEDIA)


def edge_type_counts(edges: Iterable[TypedEdge]) -> list[tuple[str, int]]:
    """
    Count edges per type.

    Returns:
        Rows for doi-doi, target-open-library and source-wikipedia (plus
        target-url when present), then ("total", sum)
    """
    counts: Counter[EdgeType] = Counter(edge.edge_type for edge in edges)
    rows = [(edge_type.value, counts[edge_type]) for edge_type in EDGE_TYPE_ROWS]
    if counts[EdgeType.TARGET_URL]:
        rows.append((EdgeType.TARGET_URL.value, counts[EdgeType.TARGET_URL]))
    rows.append(("total", sum(count for _, count in rows)))
    return rows


@dataclass
class WorkCollapse:
    """Open Library edge counts per edition and per work."""
    per_edition: int = 0
    per_work: int = 0


def collapse_per_work(edges: Iterable[TypedEdge]) -> WorkCollapse:
    """
    Count Open Library edges both raw and collapsed per (source, work).

    Editions without a known work count as their own work.
    """
    result = WorkCollapse()
    pairs: set[tuple[str, str]] = set()
    for edge in edges:
        if edge.edge_type != EdgeType.TARGET_OPEN_LIBRARY:
            continue
        result.per_edition += 1
        pairs.add((edge.bref.source_ident, edge.target_work or edge.bref.target_ident or ""))
    result.per_work = len(pairs)
    return result
