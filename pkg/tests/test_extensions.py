"""Tests for Wikipedia and Open Library edges."""

from pathlib import Path

import pytest

from refgraph.config import SortSpec
from refgraph.exceptions import ValidationError
from refgraph.extensions import (
    EdgeType,
    ExtensionStats,
    TypedEdge,
    classify_edge,
    collapse_per_work,
    edge_type_counts,
    match_openlibrary,
    match_wikipedia,
    typed_edges,
    wikipedia_ident,
)
from refgraph.ingest import biblio_from_mapping
from refgraph.types import BiblioRef, MatchReason, MatchResult, MatchStatus, WikipediaRow
from tests.synthetic import reference, release

EXACT_DOI = MatchResult(MatchStatus.EXACT, MatchReason.DOI)


def row(article: str, **cited: object) -> WikipediaRow:
    return WikipediaRow(article_title=article, cited=biblio_from_mapping(cited))


def edition(ident: str, work: str | None = None, **data: object):
    return release(ident, work_ident=work, release_stage="published", **data)


class TestClassify:
    """Test edge typing."""

    def test_types(self) -> None:
        ref = reference("a", 0, title="T")
        ref.source_doi = "10.1001/a"
        doi_doi = BiblioRef.link(ref, release("b", ext_ids={"doi": "10.1001/b"}), EXACT_DOI)
        no_dois = BiblioRef.link(ref, release("c"), EXACT_DOI, target_ident="c")
        wiki = BiblioRef.link(reference("wikipedia:Foo", 0, title="T"), release("b"), EXACT_DOI)
        book = BiblioRef.link(ref, release("x"), EXACT_DOI, target_ident="openlibrary:OL1M")
        url = BiblioRef.link(ref, release("x"), EXACT_DOI, target_ident="http://a.org/")

        assert classify_edge(doi_doi) == EdgeType.DOI_DOI
        assert classify_edge(wiki) == EdgeType.SOURCE_WIKIPEDIA
        assert classify_edge(book) == EdgeType.TARGET_OPEN_LIBRARY
        assert classify_edge(url) == EdgeType.TARGET_URL
        assert classify_edge(BiblioRef.unmatched(ref)) is None
        assert classify_edge(no_dois) is None

    def test_work_edge_without_dois_untyped(self) -> None:
        edge = BiblioRef.link(reference("a", 0, title="T"), release("b"), EXACT_DOI)
        assert classify_edge(edge) is None
        assert list(typed_edges([edge])) == []

    def test_typed_edge_checks_type(self) -> None:
        edge = BiblioRef.link(reference("a", 0, title="T"), release("b"), EXACT_DOI)
        with pytest.raises(ValidationError):
            TypedEdge(EdgeType.SOURCE_WIKIPEDIA, edge)

    def test_wikipedia_ident(self) -> None:
        assert wikipedia_ident("Ada  Lovelace ") == "wikipedia:Ada_Lovelace"


class TestWikipedia:
    """Test matching Wikipedia citations against the catalog."""

    def test_identifier_and_title_matches(self, tmp_path: Path) -> None:
        catalog = [
            release("r1", title="Sketch of the Analytical Engine", ext_ids={"doi": "10.1001/ae"}),
            release("r2", title="Notes on Coral Reefs", authors=["Ann Lee"], year=1990),
            release("r3", title="A Treatise on Tides", ext_ids={"pmid": "42"}),
        ]
        rows = [
            row("Ada Lovelace", doi="10.1001/AE"),
            row("Coral reef", title="Notes on coral reefs", authors=["Ann Lee"], year=1990),
            row("Tide", pmid="42", title="Something else entirely"),
            row("Empty", url="http://a.org/"),
        ]
        stats = ExtensionStats()

        edges = list(match_wikipedia(rows, catalog, SortSpec(tmp_dir=tmp_path), stats=stats))

        assert {(e.bref.source_ident, e.bref.target_ident, e.bref.match_reason) for e in edges} == {
            ("wikipedia:Ada_Lovelace", "r1", MatchReason.DOI),
            ("wikipedia:Coral_reef", "r2", MatchReason.TITLEAUTHORMATCH),
            ("wikipedia:Tide", "r3", MatchReason.PMID),
        }
        assert all(e.edge_type == EdgeType.SOURCE_WIKIPEDIA for e in edges)
        assert all(e.bref.provenance == "wikipedia" for e in edges)
        assert stats.inputs == 4
        assert stats.skipped == 1
        assert stats.edges == 3

    def test_rows_of_one_article_numbered(self, tmp_path: Path) -> None:
        catalog = [
            release("r1", ext_ids={"doi": "10.1001/a"}),
            release("r2", ext_ids={"doi": "10.1001/b"}),
        ]
        rows = [row("Topic", doi="10.1001/a"), row("Topic", doi="10.1001/b")]

        edges = list(match_wikipedia(rows, catalog, SortSpec(tmp_dir=tmp_path)))

        assert sorted(e.bref.edge_key for e in edges) == ["wikipedia:Topic_0", "wikipedia:Topic_1"]


class TestOpenLibrary:
    """Test matching references against Open Library editions."""

    def test_isbn_and_title_matches(self, tmp_path: Path) -> None:
        editions = [
            edition("OL1M", "OL9W", title="The Structure of Scientific Revolutions",
                    authors=["Thomas Kuhn"], ext_ids={"isbn13": "9780306406157"}),
            edition("OL2M", "OL9W", title="The Structure of Scientific Revolutions",
                    authors=["Thomas S. Kuhn"]),
        ]
        refs = [
            reference("w1", 0, isbn="0-306-40615-2"),
            reference(
                "w2", 0, title="The structure of scientific revolutions", authors=["T. Kuhn"]
            ),
        ]
        stats = ExtensionStats()

        edges = list(match_openlibrary(refs, editions, SortSpec(tmp_dir=tmp_path), stats=stats))

        pairs = {(e.bref.source_ident, e.bref.target_ident) for e in edges}
        assert pairs == {
            ("w1", "openlibrary:OL1M"),
            ("w2", "openlibrary:OL1M"),
            ("w2", "openlibrary:OL2M"),
        }
        assert {e.target_work for e in edges} == {"openlibrary:OL9W"}
        assert all(e.edge_type == EdgeType.TARGET_OPEN_LIBRARY for e in edges)

        collapsed = collapse_per_work(edges)
        assert collapsed.per_edition == 3
        assert collapsed.per_work == 2

    def test_unknown_work_counts_as_own(self) -> None:
        ref = reference("w", 0, title="T")
        edges = [
            TypedEdge(
                EdgeType.TARGET_OPEN_LIBRARY,
                BiblioRef.link(ref, release("x"), EXACT_DOI, target_ident=f"openlibrary:OL{i}M"),
            )
            for i in range(2)
        ]
        assert collapse_per_work(edges).per_work == 2


class TestCounts:
    """Test the edge-type table."""

    def test_counts(self) -> None:
        ref = reference("a", 0, title="T")
        ref.source_doi = "10.1001/a"
        doi_doi = TypedEdge(
            EdgeType.DOI_DOI,
            BiblioRef.link(ref, release("b", ext_ids={"doi": "10.1001/b"}), EXACT_DOI),
        )
        book = TypedEdge(
            EdgeType.TARGET_OPEN_LIBRARY,
            BiblioRef.link(ref, release("x"), EXACT_DOI, target_ident="openlibrary:OL1M"),
        )

        assert edge_type_counts([doi_doi, doi_doi, book]) == [
            ("doi-doi", 2), ("target-open-library", 1), ("source-wikipedia", 0), ("total", 3),
        ]

    def test_url_row_only_when_present(self) -> None:
        ref = reference("a", 0, title="T")
        url = TypedEdge(
            EdgeType.TARGET_URL,
            BiblioRef.link(ref, release("x"), EXACT_DOI, target_ident="https://a.org/"),
        )
        rows = edge_type_counts([url])
        assert ("target-url", 1) in rows
        assert rows[-1] == ("total", 1)
