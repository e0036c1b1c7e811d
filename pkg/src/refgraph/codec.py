"""
Streaming compression for inputs, spill runs and artifacts.

Text is always UTF-8 with "\n" line endings and no newline translation, so
lines read back exactly as written. Gzip output carries no file name and a
zero mtime, which keeps reruns byte-identical.
"""

import gzip
import io
from pathlib import Path
from typing import IO

import zstandard

from refgraph.config import CODECS
from refgraph.exceptions import ConfigurationError

SUFFIXES = {"zstd": ".zst", "gzip": ".gz", "none": ""}

ZSTD_LEVEL = 3


def infer_codec(path: str | Path) -> str:
    """Guess the codec from a file suffix (.zst, .gz, anything else is plain)."""
    suffix = Path(path).suffix.lower()
    if suffix in (".zst", ".zstd"):
        return "zstd"
    if suffix == ".gz":
        return "gzip"
    return "none"


def suffix_for(codec: str) -> str:
    """File suffix written for a codec."""
    if codec not in SUFFIXES:
        raise ConfigurationError(f"unknown codec {codec!r}, expected one of {CODECS}")
    return SUFFIXES[codec]


def open_text(path: str | Path, mode: str = "r", codec: str | None = None) -> IO[str]:
    """
    Open a possibly compressed text file for streaming.

    Args:
        path: File path
        mode: "r" (read), "w" (write) or "a" (append, plain files only)
        codec: zstd, gzip or none; inferred from the suffix when None

    Returns:
        Text stream yielding or accepting "\n"-terminated lines
    """
    mode = mode.replace("t", "")
    if mode not in ("r", "w", "a"):
        raise ValueError(f"unsupported mode {mode!r}")
    codec = codec or infer_codec(path)

    if codec == "none":
        return open(path, mode, encoding="utf-8", newline="\n")

    if mode == "a":
        raise ValueError(f"append is not supported for codec {codec}")

    if codec == "zstd":
        if mode == "r":
            return zstandard.open(path, "rt", encoding="utf-8", newline="\n")
        cctx = zstandard.ZstdCompressor(level=ZSTD_LEVEL)
        return zstandard.open(path, "wt", cctx=cctx, encoding="utf-8", newline="\n")

    if codec == "gzip":
        if mode == "r":
            return gzip.open(path, "rt", encoding="utf-8", newline="\n")
        raw = open(path, "wb")
        compressed = gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0)
        return _OwningTextWrapper(compressed, raw)

    raise ConfigurationError(f"unknown codec {codec!r}, expected one of {CODECS}")


class _OwningTextWrapper(io.TextIOWrapper):
    """Text wrapper that also closes the raw file under a GzipFile."""

    def __init__(self, compressed: gzip.GzipFile, raw: IO[bytes]):
        super().__init__(compressed, encoding="utf-8", newline="\n")  # type: ignore[arg-type]
        self._raw_file = raw

    def close(self) -> None:
        try:
            super().close()
        finally:
            self._raw_file.close()
