"""
Identifier and text normalization.

Equal normalized keys mean plausible identity; both exact and fuzzy
matching build on these functions. Every normalizer is total (bad input
yields None, never an exception) and idempotent.
"""

import re
import unicodedata
from collections.abc import Iterable
from dataclasses import dataclass

__all__ = [
    "NormalizedIdentifier",
    "author_sequence",
    "first_author_surname",
    "normalize_arxiv",
    "normalize_doi",
    "normalize_isbn",
    "normalize_pmcid",
    "normalize_pmid",
    "normalize_title",
    "slugify_title",
    "strip_doi_version",
    "tokenize_authors",
]

SLUG_MIN_LENGTH = 5
AUTHOR_TOKEN_MIN_LENGTH = 2


@dataclass(frozen=True)
class NormalizedIdentifier:
    """
    A canonical identifier value.

    Attributes:
        scheme: doi, pmid, pmcid, arxiv or isbn13
        value: Canonical value (arXiv: base id without version)
        extra: arXiv version number, when given
    """
    scheme: str
    value: str
    extra: int | None = None

    @property
    def canonical(self) -> str:
        """Value including the arXiv version suffix, as stored on records."""
        if self.extra is not None:
            return f"{self.value}v{self.extra}"
        return self.value

    def __str__(self) -> str:
        return self.canonical


# --- DOI ---

_DOI_LABEL_RE = re.compile(r"^(?:doi:\s*|https?://(?:dx\.|www\.)?doi\.org/)", re.IGNORECASE)
# Registrant: 4-9 digits, optional dotted subdivisions.
_DOI_RE = re.compile(r"^10\.[0-9]{4,9}(?:\.[0-9]+)*/\S+$")
_DOI_TRAILING = ".,;)"
_DOI_VERSION_RE = re.compile(r"[./]v\d+$")


def normalize_doi(raw: str | None) -> NormalizedIdentifier | None:
    """
    Canonicalize a DOI.

    Strips whitespace, a "doi:" label or doi.org resolver prefix and trailing
    ``.,;)``, then lowercases.

    Returns:
        NormalizedIdentifier("doi", ...) or None when the value is not a DOI
    """
    if not raw or not isinstance(raw, str):
        return None
    value = raw.strip()
    while True:
        stripped = _DOI_LABEL_RE.sub("", value, count=1).strip()
        if stripped == value:
            break
        value = stripped
    trimmed = None
    while trimmed != value:
        trimmed = value
        value = value.rstrip(_DOI_TRAILING).strip()
    value = value.lower()
    if not _DOI_RE.match(value):
        return None
    return NormalizedIdentifier("doi", value)


def strip_doi_version(doi: str) -> str:
    """Remove a trailing ``.v<digits>`` or ``/v<digits>`` version suffix."""
    return _DOI_VERSION_RE.sub("", doi)


# --- arXiv ---

_ARXIV_LABEL_RE = re.compile(
    r"^(?:arxiv:\s*|https?://(?:www\.)?arxiv\.org/(?:abs|pdf)/)", re.IGNORECASE
)
_ARXIV_VERSION_RE = re.compile(r"^(?P<base>.+?)v(?P<version>[0-9]+)$")
_ARXIV_NEW_RE = re.compile(r"^[0-9]{4}\.[0-9]{4,5}$")
_ARXIV_OLD_RE = re.compile(r"^[a-z]+(?:-[a-z]+)*(?:\.[a-z]{2})?/[0-9]{7}$", re.IGNORECASE)


def normalize_arxiv(raw: str | None) -> NormalizedIdentifier | None:
    """
    Canonicalize an arXiv identifier.

    Accepts new-style ``NNNN.NNNNN`` and old-style ``archive/NNNNNNN`` ids with
    an optional ``arXiv:`` label and ``v<digits>`` version.

    Returns:
        NormalizedIdentifier with the base id as value and the version in
        extra, or None
    """
    if not raw or not isinstance(raw, str):
        return None
    value = _ARXIV_LABEL_RE.sub("", raw.strip()).strip()
    if value.lower().endswith(".pdf"):
        value = value[:-4]
    version: int | None = None
    match = _ARXIV_VERSION_RE.match(value)
    if match:
        value = match.group("base")
        version = int(match.group("version"))
    if _ARXIV_NEW_RE.match(value):
        return NormalizedIdentifier("arxiv", value, version)
    if _ARXIV_OLD_RE.match(value):
        archive, _, number = value.partition("/")
        head, dot, subject = archive.partition(".")
        archive = head.lower() + (dot + subject.upper() if dot else "")
        return NormalizedIdentifier("arxiv", f"{archive}/{number}", version)
    return None


# --- ISBN ---

_ISBN_LABEL_RE = re.compile(r"^isbn(?:-1[03])?:?", re.IGNORECASE)


def _isbn10_valid(value: str) -> bool:
    total = 0
    for i, ch in enumerate(value):
        digit = 10 if ch == "X" else int(ch)
        total += digit * (10 - i)
    return total % 11 == 0


def _isbn13_check_digit(first12: str) -> int:
    total = sum(int(ch) * (1 if i % 2 == 0 else 3) for i, ch in enumerate(first12))
    return (10 - total % 10) % 10


def normalize_isbn(raw: str | None) -> NormalizedIdentifier | None:
    """
    Canonicalize an ISBN to ISBN-13.

    Hyphens and spaces are removed; ISBN-10 values are converted to the 978
    prefix with a recomputed check digit. ISBN-13 values must carry the 978 or
    979 Bookland prefix.

    Returns:
        NormalizedIdentifier("isbn13", ...) or None on a bad check digit
    """
    if not raw or not isinstance(raw, str):
        return None
    value = _ISBN_LABEL_RE.sub("", raw.strip()).strip()
    value = re.sub(r"[\s\-]", "", value).upper()

    if re.fullmatch(r"[0-9]{9}[0-9X]", value):
        if not _isbn10_valid(value):
            return None
        first12 = "978" + value[:9]
        return NormalizedIdentifier("isbn13", first12 + str(_isbn13_check_digit(first12)))

    if re.fullmatch(r"[0-9]{13}", value) and value[:3] in ("978", "979"):
        if int(value[12]) != _isbn13_check_digit(value[:12]):
            return None
        return NormalizedIdentifier("isbn13", value)

    return None


# --- PubMed ---

def normalize_pmid(raw: str | int | None) -> NormalizedIdentifier | None:
    """Canonicalize a PubMed id: 1-9 digits, no leading zeros."""
    if isinstance(raw, bool) or not isinstance(raw, str | int):
        return None
    value = str(raw).strip()
    value = re.sub(r"^pmid:\s*", "", value, flags=re.IGNORECASE)
    if not re.fullmatch(r"[0-9]+", value):
        return None
    value = value.lstrip("0")
    if not value or len(value) > 9:
        return None
    return NormalizedIdentifier("pmid", value)


def normalize_pmcid(raw: str | None) -> NormalizedIdentifier | None:
    """Canonicalize a PubMed Central id to ``PMC<digits>``."""
    if not raw or not isinstance(raw, str):
        return None
    match = re.fullmatch(r"(?:pmc)?\s*0*([1-9][0-9]{0,8})", raw.strip(), flags=re.IGNORECASE)
    if not match:
        return None
    return NormalizedIdentifier("pmcid", f"PMC{match.group(1)}")


# --- Titles and authors ---

def _fold(text: str) -> str:
    """Compatibility-decompose, drop combining marks, lowercase."""
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch)).lower()


_NON_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify_title(title: str | None, min_length: int = SLUG_MIN_LENGTH) -> str | None:
    """
    Reduce a title to a lowercase alphanumeric key.

    Diacritics are removed after Unicode compatibility decomposition; every
    character outside [a-z0-9] is dropped.

    Args:
        title: Title text
        min_length: Slugs shorter than this are too weak a key

    Returns:
        The slug, or None when it is empty or shorter than min_length
    """
    if not title or not isinstance(title, str):
        return None
    slug = _NON_SLUG_RE.sub("", _fold(title))
    if not slug or len(slug) < min_length:
        return None
    return slug


def normalize_title(title: str | None) -> str | None:
    """Title for full-title comparison: folded, whitespace collapsed, end punctuation dropped."""
    if not title or not isinstance(title, str):
        return None
    text = unicodedata.normalize("NFKC", title).casefold()
    text = " ".join(text.split()).strip(" .;:,!?\"'")
    return text or None


_NAME_SPLIT_RE = re.compile(r"[\s,]+")


def _name_tokens(name: str, min_length: int) -> list[str]:
    """Tokens of one contributor name, in order."""
    tokens: list[str] = []
    particle = ""
    for raw in _NAME_SPLIT_RE.split(name.strip()):
        slug = _NON_SLUG_RE.sub("", _fold(raw))
        if not slug:
            continue
        # A lone accented letter ("Ó" in "Ó Brien") is a name particle, not an
        # initial; it is glued to the following token.
        core = raw.strip(".'’")
        if len(core) == 1 and core.isalpha() and slug != core.lower():
            particle += slug
            continue
        slug = particle + slug
        particle = ""
        if len(slug) >= min_length:
            tokens.append(slug)
    return tokens


def tokenize_authors(
    names: Iterable[str], min_length: int = AUTHOR_TOKEN_MIN_LENGTH
) -> set[str]:
    """
    Split contributor names into a de-duplicated token set.

    Names are split on whitespace and commas; tokens are slugified like
    titles and tokens shorter than min_length (initials) are dropped.
    Particles such as "van" or "de" are kept.
    """
    tokens: set[str] = set()
    for name in names:
        if isinstance(name, str):
            tokens.update(_name_tokens(name, min_length))
    return tokens


def author_sequence(
    names: Iterable[str], min_length: int = AUTHOR_TOKEN_MIN_LENGTH
) -> tuple[frozenset[str], ...]:
    """Per-author token sets in contributor order; authors without tokens are skipped."""
    sequence = []
    for name in names:
        if isinstance(name, str):
            tokens = frozenset(_name_tokens(name, min_length))
            if tokens:
                sequence.append(tokens)
    return tuple(sequence)


def first_author_surname(names: list[str]) -> str | None:
    """
    Slugified surname of the first contributor.

    "Doe, Jane" yields "doe"; "Jane Doe" yields the last token, "doe".
    """
    for name in names:
        if not isinstance(name, str) or not name.strip():
            continue
        if "," in name:
            surname_part = name.split(",", 1)[0]
            tokens = _name_tokens(surname_part, 1)
            if tokens:
                return "".join(tokens)
        tokens = _name_tokens(name, AUTHOR_TOKEN_MIN_LENGTH)
        return tokens[-1] if tokens else None
    return None
