"""
Set comparison of DOI-DOI citation edge sets.

Edges are (citing DOI, cited DOI) pairs of normalized DOIs. Both sets go
through the external sort together, so comparison never holds either set
in memory; duplicates within one set collapse into one edge.
"""

import csv
import logging
from collections import Counter
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path

from refgraph.codec import open_text
from refgraph.config import SortSpec
from refgraph.exceptions import ValidationError
from refgraph.mapreduce import escape_field, external_sort, iter_groups
from refgraph.normalize import normalize_doi
from refgraph.types import BiblioRef

logger = logging.getLogger(__name__)

Edge = tuple[str, str]

DEFAULT_PREFIX_FAMILIES = ("10.15468",)
TOP_PREFIXES = 20


def doi_prefix(doi: str) -> str:
    """Registrant prefix of a normalized DOI ("10.15468/abc" → "10.15468")."""
    return doi.split("/", 1)[0]


def normalize_edge(citing: str | None, cited: str | None) -> Edge | None:
    """Normalize both endpoints; None when either is not a DOI."""
    a, b = normalize_doi(citing), normalize_doi(cited)
    if a is None or b is None:
        return None
    return a.value, b.value


@dataclass
class PrefixBreakdown:
    """
    DOI-prefix accounting of an edge stream.

    Attributes:
        total: Edges seen
        either: Edges with at least one endpoint in a prefix family
        both: Edges with both endpoints in a prefix family
        top: Most frequent prefixes overall, counting an edge once per
            distinct endpoint prefix
    """
    total: int = 0
    either: dict[str, int] = field(default_factory=dict)
    both: dict[str, int] = field(default_factory=dict)
    top: list[tuple[str, int]] = field(default_factory=list)

    def share(self, prefix: str) -> float:
        """Fraction of edges touching prefix (either endpoint)."""
        return self.either.get(prefix, 0) / self.total if self.total else 0.0


class _PrefixCounter:
    def __init__(self, families: Iterable[str]):
        self.families = tuple(families)
        self.total = 0
        self.either: Counter[str] = Counter()
        self.both: Counter[str] = Counter()
        self.overall: Counter[str] = Counter()

    def add(self, edge: Edge) -> None:
        self.total += 1
        citing, cited = doi_prefix(edge[0]), doi_prefix(edge[1])
        for prefix in {citing, cited}:
            self.overall[prefix] += 1
        for family in self.families:
            if family in (citing, cited):
                self.either[family] += 1
            if citing == family and cited == family:
                self.both[family] += 1

    def result(self, top: int) -> PrefixBreakdown:
        ranked = sorted(self.overall.items(), key=lambda item: (-item[1], item[0]))
        return PrefixBreakdown(
            total=self.total,
            either=dict(self.either),
            both=dict(self.both),
            top=ranked[:top],
        )


def prefix_breakdown(
    edges: Iterable[Edge],
    families: Iterable[str] = DEFAULT_PREFIX_FAMILIES,
    top: int = TOP_PREFIXES,
) -> PrefixBreakdown:
    """
    Count edges by DOI prefix.

    Args:
        edges: Normalized (citing, cited) pairs, typically the only-R set
        families: Prefixes reported with either- and both-endpoint counts
        top: Number of overall prefixes reported

    Returns:
        PrefixBreakdown; empty maps for an empty stream
    """
    counter = _PrefixCounter(families)
    for edge in edges:
        counter.add(edge)
    return counter.result(top)


@dataclass
class EdgeSetReport:
    """
    Comparison of a reference edge set C with a produced edge set R.

    Attributes:
        size_c: Distinct edges in C
        size_r: Distinct edges in R
        overlap: Edges in both
        only_c: Edges only in C
        only_r: Edges only in R
        prefix_breakdown: Prefix accounting of the only-R edges
        malformed_c: Lines of C dropped as malformed
        malformed_r: Lines of R dropped as malformed
    """
    size_c: int
    size_r: int
    overlap: int
    only_c: int
    only_r: int
    prefix_breakdown: PrefixBreakdown = field(default_factory=PrefixBreakdown)
    malformed_c: int = 0
    malformed_r: int = 0

    def check(self) -> None:
        """
        Assert the set identities.

        Raises:
            ValidationError: If size != overlap + only for either set
        """
        if self.size_c != self.overlap + self.only_c:
            raise ValidationError(
                f"size_c {self.size_c} != overlap {self.overlap} + only_c {self.only_c}"
            )
        if self.size_r != self.overlap + self.only_r:
            raise ValidationError(
                f"size_r {self.size_r} != overlap {self.overlap} + only_r {self.only_r}"
            )

    @classmethod
    def from_counts(cls, size_c: int, size_r: int, overlap: int) -> "EdgeSetReport":
        """
        Derive the differences from set sizes and their overlap.

        Raises:
            ValidationError: If overlap exceeds either size or a count is negative
        """
        if min(size_c, size_r, overlap) < 0:
            raise ValidationError("counts must be non-negative")
        if overlap > min(size_c, size_r):
            raise ValidationError(f"overlap {overlap} exceeds a set size")
        report = cls(
            size_c=size_c,
            size_r=size_r,
            overlap=overlap,
            only_c=size_c - overlap,
            only_r=size_r - overlap,
        )
        report.check()
        return report


def _edge_lines(edges: Iterable[Edge | None], side: str, malformed: list[int]) -> Iterator[str]:
    for edge in edges:
        if edge is None:
            malformed[0] += 1
            continue
        yield f"{escape_field(edge[0] + ' ' + edge[1])}\t{side}"


def compare_edge_sets(
    c: Iterable[Edge | None],
    r: Iterable[Edge | None],
    spec: SortSpec,
    *,
    codec: str = "none",
    families: Iterable[str] = DEFAULT_PREFIX_FAMILIES,
    top: int = TOP_PREFIXES,
    only_r_sink: Callable[[Edge], None] | None = None,
    buffer_bytes: int | None = None,
) -> EdgeSetReport:
    """
    Compare two edge streams by sort-merge.

    Args:
        c: Reference edges (None entries count as malformed)
        r: Produced edges (None entries count as malformed)
        spec: Sort settings
        codec: Spill run compression
        families: Prefix families of the only-R breakdown
        top: Overall prefixes reported
        only_r_sink: Receives every only-R edge
        buffer_bytes: Sort buffer override

    Returns:
        EdgeSetReport with identities checked
    """
    malformed_c, malformed_r = [0], [0]

    def lines() -> Iterator[str]:
        yield from _edge_lines(c, "c", malformed_c)
        yield from _edge_lines(r, "r", malformed_r)

    overlap = only_c = only_r = 0
    prefixes = _PrefixCounter(families)
    sorted_lines = external_sort(
        lines(), spec, codec=codec, stage="compare", buffer_bytes=buffer_bytes
    )
    for key, rest in iter_groups(sorted_lines):
        sides = set(rest)
        if sides == {"c", "r"}:
            overlap += 1
        elif sides == {"c"}:
            only_c += 1
        else:
            only_r += 1
            citing, _, cited = key.partition(" ")
            prefixes.add((citing, cited))
            if only_r_sink is not None:
                only_r_sink((citing, cited))

    report = EdgeSetReport(
        size_c=overlap + only_c,
        size_r=overlap + only_r,
        overlap=overlap,
        only_c=only_c,
        only_r=only_r,
        prefix_breakdown=prefixes.result(top),
        malformed_c=malformed_c[0],
        malformed_r=malformed_r[0],
    )
    report.check()
    if report.malformed_c or report.malformed_r:
        logger.warning(
            f"compare: dropped {report.malformed_c} malformed C and "
            f"{report.malformed_r} malformed R edges"
        )
    return report


def read_edge_csv(
    path: Path, citing_column: str = "citing", cited_column: str = "cited"
) -> Iterator[Edge | None]:
    """
    Stream edges from a (possibly compressed) CSV with a header row.

    Yields:
        Normalized edges; None for rows whose endpoints are not DOIs

    Raises:
        ValidationError: If the header lacks a named column
    """
    with open_text(path, "r") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        for column in (citing_column, cited_column):
            if column not in header:
                raise ValidationError(f"{path}: missing column {column!r} in {header}")
        for row in reader:
            yield normalize_edge(row.get(citing_column), row.get(cited_column))


def bref_doi_edges(brefs: Iterable[BiblioRef]) -> Iterator[Edge]:
    """DOI-DOI pairs of matched BiblioRefs that carry both DOIs."""
    for bref in brefs:
        if bref.is_matched and bref.source_doi and bref.target_doi:
            edge = normalize_edge(bref.source_doi, bref.target_doi)
            if edge is not None:
                yield edge
