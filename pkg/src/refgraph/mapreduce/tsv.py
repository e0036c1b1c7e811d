"""
Keyed TSV lines: the record format flowing through sort and group.

A keyed line is ``key <TAB> field <TAB> field ...`` with every field escaped so
that it holds no TAB, newline or carriage return. Lines carry no trailing
newline in memory; writers add it.
"""

import logging
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import Any, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_field(value: str) -> str:
    """Escape backslash, TAB, LF and CR."""
    if not any(ch in value for ch in _ESCAPES):
        return value
    return "".join(_ESCAPES.get(ch, ch) for ch in value)


def unescape_field(value: str) -> str:
    """Inverse of escape_field. Unknown escapes are kept verbatim."""
    if "\\" not in value:
        return value
    out: list[str] = []
    chars = iter(value)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, "")
        if nxt in _UNESCAPES:
            out.append(_UNESCAPES[nxt])
        else:
            out.append("\\" + nxt)
    return "".join(out)


def join_fields(fields: Iterable[str]) -> str:
    """Escape and TAB-join fields into one line."""
    return "\t".join(escape_field(f) for f in fields)


def split_fields(line: str) -> list[str]:
    """Split a line on TAB and unescape every field."""
    return [unescape_field(f) for f in line.rstrip("\n").split("\t")]


def line_key(line: str) -> str:
    """The (still escaped) key field of a keyed line."""
    return line.split("\t", 1)[0]


def split_key(line: str) -> tuple[str, str]:
    """Split a keyed line into (unescaped key, escaped rest)."""
    key, _, rest = line.rstrip("\n").partition("\t")
    return unescape_field(key), rest


@dataclass
class MapStats:
    """
    Counts of one map pass.

    Attributes:
        records: Records seen
        lines: Keyed lines emitted (a record may emit several)
        skipped: Records without any key
    """
    records: int = 0
    lines: int = 0
    skipped: int = 0


def _default_payload(record: Any) -> str:
    to_json = getattr(record, "to_json", None)
    if callable(to_json):
        return str(to_json())
    return str(record)


def map_to_tsv(
    records: Iterable[T],
    key_fn: Callable[[T], str | Sequence[str] | None],
    payload_fn: Callable[[T], str | Sequence[str]] | None = None,
    *,
    stats: MapStats | None = None,
    side_channel: Callable[[T], None] | None = None,
) -> Iterator[str]:
    """
    Map records to keyed TSV lines.

    Args:
        records: Input records
        key_fn: Returns a key, several keys, or None when the record has none
        payload_fn: Returns the payload as one string or a tuple of fields;
            defaults to the record's to_json()
        stats: Accumulates record/line/skip counts
        side_channel: Receives keyless records

    Yields:
        ``key <TAB> payload`` lines, one per key, in input order
    """
    stats = stats if stats is not None else MapStats()
    payload_fn = payload_fn or _default_payload
    for record in records:
        stats.records += 1
        keys = key_fn(record)
        if isinstance(keys, str):
            keys = [keys]
        keys = [k for k in keys or () if k]
        if not keys:
            stats.skipped += 1
            if side_channel is not None:
                side_channel(record)
            continue
        payload = payload_fn(record)
        if isinstance(payload, str):
            rest = escape_field(payload)
        else:
            rest = join_fields(payload)
        for key in keys:
            stats.lines += 1
            yield f"{escape_field(key)}\t{rest}"
    if stats.skipped:
        logger.debug(f"map_to_tsv: {stats.skipped} of {stats.records} records had no key")
