"""
URL extraction and cleaning.

Reference strings come from OCR and publisher metadata, so URLs arrive with
trailing punctuation, doubled schemes and missing schemes. Cleaning rules:

- trailing ``. , ; " '`` are stripped, as are ``)`` and ``]`` that close
  nothing inside the URL (``.../Foo_(bar)`` keeps its parenthesis)
- doubled schemes collapse to the innermost one (``http://http://a.org``)
- a bare ``www.`` host gets ``http://``
- DOI resolver URLs are dropped; they are identifiers, not web links
- scheme and host are lowercased, path and query are kept as is
"""

import re
from collections.abc import Iterator
from urllib.parse import urlsplit, urlunsplit

from refgraph.types import RawReference

URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\"{}|\\^`]+", re.IGNORECASE)

_DOUBLED_SCHEME_RE = re.compile(r"^(?:https?:/{1,2})+(https?://)", re.IGNORECASE)
_HOST_RE = re.compile(r"^[\w-]+(?:\.[\w-]+)+\.?$")
_TRAILING = ".,;\"'"
_CLOSERS = {")": "(", "]": "["}

DOI_RESOLVER_HOSTS = frozenset({"doi.org", "dx.doi.org", "www.doi.org"})


def _strip_tail(url: str) -> str:
    while url:
        last = url[-1]
        if last in _TRAILING:
            url = url[:-1]
        elif last in _CLOSERS and url.count(_CLOSERS[last]) < url.count(last):
            url = url[:-1]
        else:
            break
    return url


def _clean_once(url: str) -> str | None:
    url = _strip_tail(url.strip())
    url = _DOUBLED_SCHEME_RE.sub(r"\1", url)
    if url.lower().startswith("www."):
        url = "http://" + url
    try:
        parts = urlsplit(url)
    except ValueError:
        return None
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        return None
    userinfo, at, hostport = parts.netloc.rpartition("@")
    hostport = hostport.lower()
    host = hostport.split(":", 1)[0]
    if not host or not _HOST_RE.match(host):
        return None
    if host.rstrip(".") in DOI_RESOLVER_HOSTS:
        return None
    netloc = f"{userinfo}{at}{hostport}"
    return urlunsplit((scheme, netloc, parts.path, parts.query, parts.fragment))


def clean_url(raw: str | None) -> str | None:
    """
    Clean one URL.

    Returns:
        The cleaned absolute http(s) URL, or None when nothing usable is left
        or the URL points at a DOI resolver
    """
    if not raw or not isinstance(raw, str):
        return None
    url = raw
    # Rebuilding can expose another removable tail; repeat to a fixpoint.
    for _ in range(5):
        cleaned = _clean_once(url)
        if cleaned is None or cleaned == url:
            return cleaned
        url = cleaned
    return url


def find_urls(text: str | None) -> Iterator[str]:
    """URL-shaped substrings of free text, uncleaned."""
    if not text:
        return
    for match in URL_RE.finditer(text):
        yield match.group(0)


def extract_clean_urls(ref: RawReference) -> list[str]:
    """
    Cleaned URLs of a reference.

    The url field comes first, then URL-shaped substrings of the unstructured
    citation; duplicates are dropped keeping first occurrence.
    """
    candidates = []
    if ref.biblio.url:
        found = list(find_urls(ref.biblio.url))
        candidates.extend(found or [ref.biblio.url])
    candidates.extend(find_urls(ref.biblio.unstructured))

    urls: list[str] = []
    for candidate in candidates:
        url = clean_url(candidate)
        if url and url not in urls:
            urls.append(url)
    return urls
