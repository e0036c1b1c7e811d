"""Tests for DOI-DOI edge set comparison."""

from pathlib import Path

import pytest

from refgraph.config import SortSpec
from refgraph.compare import (
    EdgeSetReport,
    bref_doi_edges,
    compare_edge_sets,
    doi_prefix,
    normalize_edge,
    prefix_breakdown,
    read_edge_csv,
)
from refgraph.exceptions import ValidationError
from refgraph.types import BiblioRef, MatchReason, MatchResult, MatchStatus
from tests.synthetic import reference, release

EXACT_DOI = MatchResult(MatchStatus.EXACT, MatchReason.DOI)


class TestEdges:
    """Test edge normalization."""

    def test_normalize_edge(self) -> None:
        assert normalize_edge("DOI:10.1001/A", "https://doi.org/10.1002/b") == (
            "10.1001/a", "10.1002/b"
        )
        assert normalize_edge("10.1001/a", "nope") is None
        assert normalize_edge(None, "10.1001/a") is None

    def test_doi_prefix(self) -> None:
        assert doi_prefix("10.15468/abc/def") == "10.15468"


class TestFromCounts:
    """Test deriving the differences from set sizes."""

    def test_published_totals(self) -> None:
        """Sizes and overlap at full corpus scale."""
        report = EdgeSetReport.from_counts(1_186_958_897, 1_303_424_212, 1_046_438_515)

        assert report.only_c == 140_520_382
        assert report.only_r == 256_985_697

    def test_overlap_too_large(self) -> None:
        with pytest.raises(ValidationError):
            EdgeSetReport.from_counts(10, 5, 6)

    def test_negative(self) -> None:
        with pytest.raises(ValidationError):
            EdgeSetReport.from_counts(-1, 5, 0)

    def test_check(self) -> None:
        report = EdgeSetReport(size_c=5, size_r=5, overlap=3, only_c=2, only_r=1)
        with pytest.raises(ValidationError, match="size_r"):
            report.check()


class TestCompareEdgeSets:
    """Test the sort-merge comparison."""

    def test_counts(self, tmp_path: Path) -> None:
        c = [
            ("10.1001/a", "10.1001/b"), ("10.1001/a", "10.1001/c"), ("10.1001/a", "10.1001/b"), None
        ]
        r = [("10.1001/a", "10.1001/b"), ("10.15468/x", "10.1001/d"), ("10.15468/x", "10.15468/y")]
        only_r: list[tuple[str, str]] = []

        report = compare_edge_sets(c, r, SortSpec(tmp_dir=tmp_path), only_r_sink=only_r.append)

        assert report.size_c == 2
        assert report.size_r == 3
        assert report.overlap == 1
        assert report.only_c == 1
        assert report.only_r == 2
        assert report.malformed_c == 1
        assert report.malformed_r == 0
        assert only_r == [("10.15468/x", "10.1001/d"), ("10.15468/x", "10.15468/y")]
        assert report.prefix_breakdown.either == {"10.15468": 2}
        assert report.prefix_breakdown.both == {"10.15468": 1}
        assert report.prefix_breakdown.share("10.15468") == 1.0

    def test_empty_sets(self, tmp_path: Path) -> None:
        report = compare_edge_sets([], [], SortSpec(tmp_dir=tmp_path))

        assert (report.size_c, report.size_r, report.overlap) == (0, 0, 0)
        assert report.prefix_breakdown.either == {}
        assert report.prefix_breakdown.share("10.15468") == 0.0

    def test_spilled_matches_sets(self, tmp_path: Path) -> None:
        """External comparison agrees with Python sets."""
        c = [(f"10.1001/{i}", f"10.1002/{i % 17}") for i in range(300)]
        r = [(f"10.1001/{i}", f"10.1002/{i % 17}") for i in range(150, 500)]
        report = compare_edge_sets(c, r, SortSpec(tmp_dir=tmp_path), buffer_bytes=2048)

        assert report.overlap == len(set(c) & set(r))
        assert report.only_c == len(set(c) - set(r))
        assert report.only_r == len(set(r) - set(c))


class TestPrefixBreakdown:
    """Test prefix accounting."""

    def test_top_prefixes(self) -> None:
        edges = [
            ("10.1001/a", "10.1001/b"),
            ("10.1001/a", "10.1002/b"),
            ("10.1003/a", "10.1002/c"),
            ("10.1002/a", "10.1002/d"),
        ]
        breakdown = prefix_breakdown(edges, families=("10.1002",), top=2)

        assert breakdown.total == 4
        assert breakdown.top == [("10.1002", 3), ("10.1001", 2)]
        assert breakdown.either == {"10.1002": 3}
        assert breakdown.both == {"10.1002": 1}


class TestInputs:
    """Test reading external edges and produced edges."""

    def test_read_edge_csv(self, tmp_path: Path) -> None:
        path = tmp_path / "coci.csv"
        path.write_text(
            "oci,citing,cited\n1,10.1001/A,10.1002/B\n2,junk,10.1002/b\n", encoding="utf-8"
        )
        assert list(read_edge_csv(path)) == [("10.1001/a", "10.1002/b"), None]

    def test_custom_columns(self, tmp_path: Path) -> None:
        path = tmp_path / "edges.csv"
        path.write_text("from,to\n10.1001/a,10.1002/b\n", encoding="utf-8")
        assert list(read_edge_csv(path, "from", "to")) == [("10.1001/a", "10.1002/b")]

    def test_missing_column(self, tmp_path: Path) -> None:
        path = tmp_path / "edges.csv"
        path.write_text("a,b\n", encoding="utf-8")
        with pytest.raises(ValidationError, match="citing"):
            list(read_edge_csv(path))

    def test_bref_doi_edges(self) -> None:
        ref = reference("s", 0, title="T")
        ref.source_doi = "10.1001/src"
        matched = BiblioRef.link(
            ref, release("t", ext_ids={"doi": "10.1002/tgt"}), EXACT_DOI
        )
        no_target_doi = BiblioRef.link(ref, release("u"), EXACT_DOI)
        unmatched = BiblioRef.unmatched(ref)

        edges = list(bref_doi_edges([matched, no_target_doi, unmatched]))
        assert edges == [("10.1001/src", "10.1002/tgt")]
