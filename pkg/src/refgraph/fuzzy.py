"""
Fuzzy matching: title-slug candidates verified by an ordered rule cascade.

Candidate generation is generous (every record sharing a title slug is a
candidate); verification is strict. verify() applies these rules in order,
the first one that fires decides:

     1. blacklisted           either slug is in the stop list         ambiguous
     2. titleauthormatch      same title, same authors, same year     exact
     3. versioneddoi          DOIs differ only in a version suffix    strong
     4. arxivversion          same arXiv base, other version          strong
     5. pmiddoipair           same PMID and same DOI                  strong
     6. dataciterelatedid     related-DOI assertion names the other   strong
     7. yearconflict          years further apart than the slack      different
     8. jaccardauthors        same slug, author Jaccard >= strong     strong
     9. tokenizedauthors      same slug, one author set contains other strong
    10. slugtitleauthormatch  same slug, same first-author surname    strong
    11. contribmismatch       same slug, author Jaccard < floor       different
    12. fallback: same slug with Jaccard in [floor, strong) is weak
        jaccardauthors; same slug with exactly one author list empty is
        weak tokenizedauthors; anything else is different contribmismatch.

Only exact and strong verdicts produce edges.
"""

import json
import logging
import threading
from collections import Counter
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from refgraph.config import SortSpec, VerifyConfig
from refgraph.exactmatch import DEFAULT_GROUP_CAP, KeyedDoc, Side, ref_keys
from refgraph.exceptions import ValidationError
from refgraph.ingest import reference_from_mapping, release_from_mapping
from refgraph.mapreduce import (
    GroupStats,
    external_sort,
    group_reduce,
    split_fields,
    take_capped,
)
from refgraph.normalize import (
    author_sequence,
    first_author_surname,
    normalize_arxiv,
    normalize_title,
    slugify_title,
    strip_doi_version,
    tokenize_authors,
)
from refgraph.types import (
    BiblioRef,
    MatchReason,
    MatchResult,
    MatchStatus,
    RawReference,
    ReleaseRecord,
    ReleaseStage,
)

logger = logging.getLogger(__name__)

DEFAULT_VERIFY = VerifyConfig()


def candidate_key(
    record: ReleaseRecord | RawReference, min_length: int = DEFAULT_VERIFY.slug_min_length
) -> str | None:
    """Title slug used to group match candidates; None without a usable title."""
    title = record.biblio.title if isinstance(record, RawReference) else record.title
    return slugify_title(title, min_length)


def ref_to_release(ref: RawReference) -> ReleaseRecord:
    """
    Lift a reference to a pseudo-release so one verifier serves all pairs.

    The pseudo-release's ident is the reference's edge key.
    """
    b = ref.biblio
    ext_ids = {
        scheme: value
        for scheme, value in (
            ("doi", b.doi), ("pmid", b.pmid), ("pmcid", b.pmcid), ("arxiv", b.arxiv),
            ("isbn13", b.isbn),
        )
        if value
    }
    return ReleaseRecord(
        ident=f"{ref.source_ident}_{ref.ref_index}",
        title=b.title,
        authors=list(b.authors),
        year=b.year,
        release_stage=ReleaseStage.UNKNOWN,
        ext_ids=ext_ids,
        container_name=b.container_name,
        volume=b.volume,
        pages=b.pages,
    )


def _jaccard(a: set[str], b: set[str]) -> float | None:
    union = a | b
    if not union:
        return None
    return len(a & b) / len(union)


def _rule(status: MatchStatus, reason: MatchReason) -> MatchResult:
    return MatchResult(status, reason)


def verify(
    a: ReleaseRecord, b: ReleaseRecord, config: VerifyConfig = DEFAULT_VERIFY
) -> MatchResult:
    """
    Compare two records with the rule cascade.

    Total over any pair of records; the status is symmetric in a and b.

    Args:
        a: First record
        b: Second record
        config: Thresholds and stop list

    Returns:
        Verdict of the first rule that fires
    """
    # 1. Generic titles cannot be verified.
    for title in (a.title, b.title):
        slug = slugify_title(title, min_length=1)
        if slug and slug in config.slug_stoplist:
            return _rule(MatchStatus.AMBIGUOUS, MatchReason.BLACKLISTED)

    # 2.
    title_a, title_b = normalize_title(a.title), normalize_title(b.title)
    seq_a = author_sequence(a.authors, config.author_token_min_length)
    seq_b = author_sequence(b.authors, config.author_token_min_length)
    if (
        title_a is not None
        and title_a == title_b
        and seq_a
        and seq_a == seq_b
        and (a.year is None or b.year is None or a.year == b.year)
    ):
        return _rule(MatchStatus.EXACT, MatchReason.TITLEAUTHORMATCH)

    # 3.
    doi_a, doi_b = a.doi, b.doi
    if (
        doi_a
        and doi_b
        and doi_a != doi_b
        and strip_doi_version(doi_a) == strip_doi_version(doi_b)
    ):
        return _rule(MatchStatus.STRONG, MatchReason.VERSIONEDDOI)

    # 4.
    arxiv_a = normalize_arxiv(a.ext_ids.get("arxiv"))
    arxiv_b = normalize_arxiv(b.ext_ids.get("arxiv"))
    if (
        arxiv_a is not None
        and arxiv_b is not None
        and arxiv_a.value == arxiv_b.value
        and (arxiv_a.extra is None or arxiv_b.extra is None or arxiv_a.extra != arxiv_b.extra)
    ):
        return _rule(MatchStatus.STRONG, MatchReason.ARXIVVERSION)

    # 5.
    pmid_a, pmid_b = a.ext_ids.get("pmid"), b.ext_ids.get("pmid")
    if pmid_a and doi_a and pmid_a == pmid_b and doi_a == doi_b:
        return _rule(MatchStatus.STRONG, MatchReason.PMIDDOIPAIR)

    # 6. Metadata-asserted relations only.
    if (doi_b and doi_b in a.related_dois) or (doi_a and doi_a in b.related_dois):
        return _rule(MatchStatus.STRONG, MatchReason.DATACITERELATEDID)

    # 7.
    if a.year is not None and b.year is not None and abs(a.year - b.year) > config.year_slack:
        return _rule(MatchStatus.DIFFERENT, MatchReason.YEARCONFLICT)

    slug_a = slugify_title(a.title, config.slug_min_length)
    slug_b = slugify_title(b.title, config.slug_min_length)
    same_slug = slug_a is not None and slug_a == slug_b
    tokens_a = tokenize_authors(a.authors, config.author_token_min_length)
    tokens_b = tokenize_authors(b.authors, config.author_token_min_length)
    jaccard = _jaccard(tokens_a, tokens_b)
    both_authored = bool(tokens_a) and bool(tokens_b)

    if same_slug:
        # 8.
        if both_authored and jaccard is not None and jaccard >= config.jaccard_strong:
            return _rule(MatchStatus.STRONG, MatchReason.JACCARDAUTHORS)
        # 9.
        if both_authored and (tokens_a <= tokens_b or tokens_b <= tokens_a):
            return _rule(MatchStatus.STRONG, MatchReason.TOKENIZEDAUTHORS)
        # 10.
        surname_a = first_author_surname(a.authors)
        if surname_a and surname_a == first_author_surname(b.authors):
            return _rule(MatchStatus.STRONG, MatchReason.SLUGTITLEAUTHORMATCH)
        # 11.
        if both_authored and jaccard is not None and jaccard < config.jaccard_floor:
            return _rule(MatchStatus.DIFFERENT, MatchReason.CONTRIBMISMATCH)
        # 12.
        if both_authored:
            return _rule(MatchStatus.WEAK, MatchReason.JACCARDAUTHORS)
        if bool(tokens_a) != bool(tokens_b):
            return _rule(MatchStatus.WEAK, MatchReason.TOKENIZEDAUTHORS)

    return _rule(MatchStatus.DIFFERENT, MatchReason.CONTRIBMISMATCH)


@dataclass
class FuzzyStats:
    """
    Counts of a fuzzy matching pass.

    Attributes:
        groups: Slug groups verified
        pairs: Reference/release pairs verified
        edges: Edges emitted
        hot_keys: Groups skipped for exceeding the cap
        verdicts: Verified pairs by (status, reason)
    """
    groups: int = 0
    pairs: int = 0
    edges: int = 0
    hot_keys: int = 0
    verdicts: Counter = field(default_factory=Counter)

    def merge(self, other: "FuzzyStats") -> None:
        """Add the counts of another (per-group) tally."""
        self.groups += other.groups
        self.pairs += other.pairs
        self.edges += other.edges
        self.hot_keys += other.hot_keys
        self.verdicts.update(other.verdicts)


def match_group(
    group: Sequence[RawReference | ReleaseRecord],
    *,
    config: VerifyConfig = DEFAULT_VERIFY,
    cap: int = DEFAULT_GROUP_CAP,
    stats: FuzzyStats | None = None,
) -> list[BiblioRef]:
    """
    Verify every reference against every release of one slug group.

    Args:
        group: All references and releases sharing a slug
        config: Verification thresholds
        cap: Largest group verified; larger groups are skipped as hot keys
        stats: Accumulates counts

    Returns:
        Edges for exact and strong verdicts only
    """
    stats = stats if stats is not None else FuzzyStats()
    if len(group) > cap:
        stats.hot_keys += 1
        logger.warning(f"fuzzy: hot slug group of {len(group)} records skipped (cap {cap})")
        return []
    stats.groups += 1
    refs = [r for r in group if isinstance(r, RawReference)]
    releases = sorted(
        (r for r in group if isinstance(r, ReleaseRecord)), key=lambda r: r.ident
    )

    edges = []
    for ref in refs:
        pseudo = ref_to_release(ref)
        for release in releases:
            if release.ident == ref.source_ident:
                continue
            result = verify(pseudo, release, config)
            stats.pairs += 1
            stats.verdicts[(result.status.value, result.reason.value)] += 1
            if result.is_match:
                edges.append(BiblioRef.link(ref, release, result))
    stats.edges += len(edges)
    return edges


def run_fuzzy(
    refs: Iterable[RawReference],
    releases: Iterable[ReleaseRecord],
    spec: SortSpec,
    *,
    config: VerifyConfig = DEFAULT_VERIFY,
    codec: str = "none",
    cap: int = DEFAULT_GROUP_CAP,
    stats: FuzzyStats | None = None,
    workers: int = 1,
    include_identified: bool = False,
    buffer_bytes: int | None = None,
) -> Iterator[BiblioRef]:
    """
    Stream fuzzy edges for references against the catalog.

    Args:
        refs: References; only those without identifiers are candidates
            unless include_identified is set
        releases: Catalog releases
        spec: Sort settings
        config: Verification thresholds
        codec: Spill run compression
        cap: Hot-key cap
        stats: Accumulates counts
        workers: Threads for verification
        include_identified: Also match references that carry identifiers
        buffer_bytes: Sort buffer override

    Yields:
        Exact and strong edges in slug order
    """
    stats = stats if stats is not None else FuzzyStats()

    def lines() -> Iterator[str]:
        for ref in refs:
            if not include_identified and ref_keys(ref):
                continue
            slug = candidate_key(ref, config.slug_min_length)
            if slug:
                yield KeyedDoc(slug, Side.REF, ref.to_json()).to_line()
        for release in releases:
            slug = candidate_key(release, config.slug_min_length)
            if slug:
                yield KeyedDoc(slug, Side.RELEASE, release.to_json()).to_line()

    lock = threading.Lock()

    def reducer(key: str, rest: Iterator[str]) -> list[BiblioRef]:
        local = FuzzyStats()
        try:
            return reduce_slug(key, rest, local)
        finally:
            with lock:
                stats.merge(local)

    def reduce_slug(key: str, rest: Iterator[str], local: FuzzyStats) -> list[BiblioRef]:
        members = take_capped(rest, cap)
        if members is None:
            local.hot_keys += 1
            logger.warning(f"fuzzy: hot slug {key!r} skipped (cap {cap})")
            return []
        group: list[RawReference | ReleaseRecord] = []
        has_ref = has_release = False
        for line in members:
            side, payload = split_fields(line)
            data = json.loads(payload)
            if side == Side.REF.value:
                group.append(reference_from_mapping(data))
                has_ref = True
            else:
                group.append(release_from_mapping(data))
                has_release = True
        if not (has_ref and has_release):
            return []
        return match_group(group, config=config, cap=cap, stats=local)

    sorted_lines = external_sort(
        lines(), spec, codec=codec, stage="fuzzy", buffer_bytes=buffer_bytes
    )
    yield from group_reduce(
        sorted_lines, reducer, stats=GroupStats(), stage="fuzzy", workers=workers,
        pure=workers > 1, cap=cap,
    )
    logger.info(
        f"fuzzy: {stats.edges} edges from {stats.pairs} verified pairs in {stats.groups} groups"
    )


# --- labeled pairs ---

@dataclass
class LabeledPair:
    """
    One labeled verification case.

    Attributes:
        a: First record
        b: Second record
        status: Expected status
        reason: Expected reason, when the file names one
        line: Line number in the source file
    """
    a: ReleaseRecord
    b: ReleaseRecord
    status: MatchStatus
    reason: MatchReason | None = None
    line: int = 0


@dataclass
class RegressionReport:
    """Outcome of running the verifier over labeled pairs."""
    total: int = 0
    passed: int = 0
    failures: list[tuple[LabeledPair, MatchResult]] = field(default_factory=list)
    reasons: Counter = field(default_factory=Counter)

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def load_labeled_pairs(path: Path) -> list[LabeledPair]:
    """
    Read a labeled-pair file.

    Each non-blank line not starting with "#" holds
    ``recordA-JSON <TAB> recordB-JSON <TAB> status [<TAB> reason]``.
    Records need no ident.

    Raises:
        ValidationError: On a malformed line
    """
    pairs = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (3, 4):
                raise ValidationError(f"{path}:{number}: expected 3 or 4 TAB separated fields")
            try:
                a = release_from_mapping(json.loads(parts[0]), require_ident=False)
                b = release_from_mapping(json.loads(parts[1]), require_ident=False)
                status = MatchStatus(parts[2].strip())
                reason = MatchReason(parts[3].strip()) if len(parts) == 4 else None
            except (ValueError, AttributeError) as e:
                raise ValidationError(f"{path}:{number}: {e}") from e
            pairs.append(LabeledPair(a, b, status, reason, number))
    return pairs


def run_regression(
    pairs: Iterable[LabeledPair], config: VerifyConfig = DEFAULT_VERIFY
) -> RegressionReport:
    """Verify every labeled pair; a pair passes when status (and reason, if given) agree."""
    report = RegressionReport()
    for pair in pairs:
        report.total += 1
        result = verify(pair.a, pair.b, config)
        report.reasons[result.reason.value] += 1
        if result.status == pair.status and (pair.reason is None or result.reason == pair.reason):
            report.passed += 1
        else:
            report.failures.append((pair, result))
    return report
