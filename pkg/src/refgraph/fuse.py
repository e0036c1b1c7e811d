"""
Fusion of exact edges, fuzzy edges and unmatched references.

Every reference resolves to exactly one output row keyed by its edge key:
the best candidate edge by precedence, or the unmatched placeholder.
"""

import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from refgraph.codec import open_text
from refgraph.config import SortSpec
from refgraph.exceptions import ValidationError
from refgraph.mapreduce import (
    GroupStats,
    external_sort,
    group_reduce,
    join_fields,
    unescape_field,
)
from refgraph.types import BiblioRef, MatchReason, MatchStatus, RawReference

logger = logging.getLogger(__name__)

STATUS_PRECEDENCE = (MatchStatus.EXACT, MatchStatus.STRONG)

REASON_PRECEDENCE = (
    MatchReason.DOI,
    MatchReason.PMID,
    MatchReason.PMCID,
    MatchReason.ARXIV,
    MatchReason.ISBN,
    MatchReason.TITLEAUTHORMATCH,
    MatchReason.VERSIONEDDOI,
    MatchReason.ARXIVVERSION,
    MatchReason.PMIDDOIPAIR,
    MatchReason.DATACITERELATEDID,
    MatchReason.JACCARDAUTHORS,
    MatchReason.TOKENIZEDAUTHORS,
    MatchReason.SLUGTITLEAUTHORMATCH,
)

_STATUS_RANK = {status: rank for rank, status in enumerate(STATUS_PRECEDENCE)}
_REASON_RANK = {reason: rank for rank, reason in enumerate(REASON_PRECEDENCE)}

STATS_HEADER = ("provenance", "status", "reason", "count")


def _precedence(edge: BiblioRef) -> tuple[int, int, str, str]:
    return (
        _STATUS_RANK.get(edge.match_status, len(_STATUS_RANK)),
        _REASON_RANK.get(edge.match_reason, len(_REASON_RANK)),
        edge.target_ident or "",
        edge.provenance,
    )


def fuse_group(group: Iterable[BiblioRef]) -> BiblioRef:
    """
    Pick the one output row for an edge key.

    Precedence: exact before strong; then identifier reasons (doi, pmid,
    pmcid, arxiv, isbn) before verification reasons in cascade order; then
    the smallest target ident, then provenance. A group without matched
    candidates yields its unmatched record.

    Raises:
        ValidationError: If the group is empty or mixes edge keys
    """
    edges = list(group)
    if not edges:
        raise ValidationError("cannot fuse an empty group")
    keys = {edge.edge_key for edge in edges}
    if len(keys) > 1:
        raise ValidationError(f"group mixes edge keys: {sorted(keys)}")

    matched = [edge for edge in edges if edge.is_matched]
    if matched:
        return min(matched, key=_precedence)
    return min(edges, key=lambda edge: edge.provenance)


@dataclass
class FuseStats:
    """
    Counts of a fusion pass.

    Attributes:
        groups: Edge keys fused
        candidates: Input rows
        matched: Output rows with a target
        unmatched: Output rows without a target
    """
    groups: int = 0
    candidates: int = 0
    matched: int = 0
    unmatched: int = 0


def fuse(
    edges: Iterable[BiblioRef],
    refs: Iterable[RawReference | BiblioRef],
    spec: SortSpec,
    *,
    codec: str = "none",
    stats: FuseStats | None = None,
    buffer_bytes: int | None = None,
) -> Iterator[BiblioRef]:
    """
    Fuse candidate edges with the unmatched placeholders of all references.

    Args:
        edges: Exact, fuzzy and extension edges
        refs: References (or ready unmatched edges) so unresolved ones survive
        spec: Sort settings
        codec: Spill run compression
        stats: Accumulates counts
        buffer_bytes: Sort buffer override

    Yields:
        One BiblioRef per edge key, sorted by edge key
    """
    stats = stats if stats is not None else FuseStats()

    def lines() -> Iterator[str]:
        for edge in edges:
            stats.candidates += 1
            yield join_fields((edge.edge_key, edge.to_json()))
        for ref in refs:
            placeholder = ref if isinstance(ref, BiblioRef) else BiblioRef.unmatched(ref)
            stats.candidates += 1
            yield join_fields((placeholder.edge_key, placeholder.to_json()))

    def reducer(key: str, rest: Iterator[str]) -> list[BiblioRef]:
        best = fuse_group(BiblioRef.from_json(unescape_field(line)) for line in rest)
        stats.groups += 1
        if best.is_matched:
            stats.matched += 1
        else:
            stats.unmatched += 1
        return [best]

    sorted_lines = external_sort(
        lines(), spec, codec=codec, stage="fuse", buffer_bytes=buffer_bytes
    )
    yield from group_reduce(sorted_lines, reducer, stats=GroupStats(), stage="fuse")
    logger.info(
        f"fuse: {stats.groups} edge keys, {stats.matched} matched, "
        f"{stats.unmatched} unmatched from {stats.candidates} candidates"
    )


def read_brefs(path: Path) -> Iterator[BiblioRef]:
    """Stream BiblioRefs from a (possibly compressed) JSON lines file."""
    with open_text(path, "r") as f:
        for line in f:
            if line.strip():
                yield BiblioRef.from_json(line)


# --- match accounting ---

@dataclass(frozen=True)
class MatchCount:
    """One row of the match-count table."""
    provenance: str
    status: str
    reason: str
    count: int

    def to_row(self) -> tuple[str, str, str, str]:
        return (self.provenance, self.status, self.reason, str(self.count))


def match_stats(final: Iterable[BiblioRef]) -> list[MatchCount]:
    """
    Count final rows by (provenance, status, reason).

    Unmatched rows are counted too. Rows are sorted by count descending,
    ties by (provenance, status, reason) ascending.
    """
    counts: Counter[tuple[str, str, str]] = Counter()
    for edge in final:
        counts[(edge.provenance, edge.match_status.value, edge.match_reason.value)] += 1
    rows = [MatchCount(p, s, r, c) for (p, s, r), c in counts.items()]
    rows.sort(key=lambda row: (-row.count, row.provenance, row.status, row.reason))
    return rows


def top_n(rows: list[MatchCount], n: int) -> list[MatchCount]:
    """The first n rows of a sorted table."""
    return rows[:n] if n > 0 else []


def write_stats_tsv(rows: Iterable[MatchCount], out: Path | IO[str]) -> None:
    """Write the match-count table as TSV with a header line."""
    if isinstance(out, Path):
        with open_text(out, "w", "none") as f:
            write_stats_tsv(rows, f)
        return
    out.write("\t".join(STATS_HEADER) + "\n")
    for row in rows:
        out.write("\t".join(row.to_row()) + "\n")
