"""
External-memory sort of keyed TSV lines.

Lines are buffered up to the memory budget, sorted, and spilled to
compressed run files; runs are merged k-way with heapq.merge, in several
passes when there are more runs than the merge fan-in. Order is by key in
code point order (equal to byte order of the UTF-8 encoding), then by the
full line when SortSpec.stable is set.
"""

import hashlib
import heapq
import logging
import os
import shutil
import sys
import tempfile
import threading
from collections.abc import Iterable, Iterator
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from operator import itemgetter
from pathlib import Path

from refgraph.codec import open_text, suffix_for
from refgraph.config import SortSpec
from refgraph.exceptions import SortError

logger = logging.getLogger(__name__)

MERGE_FAN_IN = 64

# Bytes charged per buffered line on top of the two string objects: the
# (key, line) tuple and its slot in the buffer list.
_ENTRY_OVERHEAD = sys.getsizeof((None, None)) + 8

_Entry = tuple[str, str]


@dataclass
class SortStats:
    """
    Instrumentation of one external sort.

    Attributes:
        lines: Lines sorted
        runs: Spill runs written in the first pass
        merge_passes: Intermediate merge passes (0 when runs <= fan-in)
        peak_buffer_bytes: Largest estimated size of all live line buffers
    """
    lines: int = 0
    runs: int = 0
    merge_passes: int = 0
    peak_buffer_bytes: int = 0


def _entry(line: str) -> _Entry:
    if line.endswith("\n"):
        line = line[:-1]
    return line.split("\t", 1)[0], line


def _entry_size(entry: _Entry) -> int:
    return sys.getsizeof(entry[0]) + sys.getsizeof(entry[1]) + _ENTRY_OVERHEAD


class _RunWriter:
    """Writes sorted buffers as run files in one private directory."""

    def __init__(self, run_dir: Path, stage: str, codec: str, stable: bool):
        self.run_dir = run_dir
        self.stage = stage
        self.codec = codec
        self.stable = stable
        self._counter = 0
        self._lock = threading.Lock()

    def _next_index(self) -> int:
        with self._lock:
            self._counter += 1
            return self._counter

    def write(self, entries: Iterable[_Entry], level: int, presorted: bool = False) -> Path:
        """Write entries to a new run; names derive from stage, level and content hash."""
        if not presorted:
            entries = sorted(entries) if self.stable else sorted(entries, key=itemgetter(0))
        index = self._next_index()
        suffix = suffix_for(self.codec)
        tmp = self.run_dir / f".{self.stage}-{level}-{index:06d}.partial{suffix}"
        digest = hashlib.blake2b(digest_size=8)
        with open_text(tmp, "w", self.codec) as f:
            for _, line in entries:
                data = line + "\n"
                digest.update(data.encode("utf-8"))
                f.write(data)
        final = self.run_dir / f"{self.stage}-{level}-{index:06d}-{digest.hexdigest()}.tsv{suffix}"
        os.replace(tmp, final)
        return final


def _read_run(path: Path, codec: str) -> Iterator[_Entry]:
    with open_text(path, "r", codec) as f:
        for line in f:
            yield _entry(line)


def _merge(runs: list[Path], codec: str, stable: bool) -> Iterator[_Entry]:
    readers = [_read_run(path, codec) for path in runs]
    if stable:
        return heapq.merge(*readers)
    return heapq.merge(*readers, key=itemgetter(0))


def external_sort(
    lines: Iterable[str],
    spec: SortSpec,
    *,
    codec: str = "none",
    stage: str = "sort",
    buffer_bytes: int | None = None,
    stats: SortStats | None = None,
) -> Iterator[str]:
    """
    Sort keyed lines with bounded memory.

    Args:
        lines: Keyed TSV lines (a trailing newline is stripped)
        spec: Sort settings; validated before any work
        codec: Compression of spill runs
        stage: Prefix of run file names
        buffer_bytes: Buffer size override; defaults to spec.memory_budget
        stats: Receives run and memory instrumentation

    Yields:
        Lines in sorted order, without trailing newline

    Raises:
        ConfigurationError: If spec is invalid
        SortError: If a spill run cannot be written; partial runs are removed
    """
    spec.validate()
    stats = stats if stats is not None else SortStats()
    budget = buffer_bytes if buffer_bytes is not None else spec.memory_budget
    parallelism = max(1, spec.parallelism)
    # All live buffers together stay within the budget.
    per_buffer = max(1, budget // parallelism)

    run_dir = Path(tempfile.mkdtemp(prefix=f"refgraph-{stage}-", dir=spec.resolved_tmp_dir()))
    writer = _RunWriter(run_dir, stage, codec, spec.stable)
    try:
        runs, tail = _spill(lines, writer, per_buffer, parallelism, stats)
        if not runs:
            if spec.stable:
                tail.sort()
            else:
                tail.sort(key=itemgetter(0))
            for _, line in tail:
                yield line
            return
        if tail:
            runs.append(writer.write(tail, 0))
            tail = []
        stats.runs = len(runs)
        logger.debug(f"{stage}: {stats.lines} lines in {len(runs)} runs")

        level = 0
        while len(runs) > MERGE_FAN_IN:
            level += 1
            stats.merge_passes += 1
            merged = []
            for i in range(0, len(runs), MERGE_FAN_IN):
                batch = runs[i:i + MERGE_FAN_IN]
                merged.append(
                    writer.write(_merge(batch, codec, spec.stable), level, presorted=True)
                )
                for path in batch:
                    path.unlink()
            runs = merged
        for _, line in _merge(runs, codec, spec.stable):
            yield line
    except OSError as e:
        raise SortError(f"{stage}: spill to {run_dir} failed: {e}") from e
    finally:
        shutil.rmtree(run_dir, ignore_errors=True)


def _spill(
    lines: Iterable[str],
    writer: _RunWriter,
    per_buffer: int,
    parallelism: int,
    stats: SortStats,
) -> tuple[list[Path], list[_Entry]]:
    """
    Fill buffers and write full ones as runs.

    Returns:
        (run paths in input order, last partially filled buffer)
    """
    runs: list[Future[Path]] = []
    in_flight: list[tuple[Future[Path], int]] = []
    executor = ThreadPoolExecutor(max_workers=parallelism - 1) if parallelism > 1 else None

    def live_bytes() -> int:
        return sum(size for future, size in in_flight if not future.done())

    buffer: list[_Entry] = []
    size = 0
    try:
        for line in lines:
            entry = _entry(line)
            buffer.append(entry)
            size += _entry_size(entry)
            stats.lines += 1
            stats.peak_buffer_bytes = max(stats.peak_buffer_bytes, size + live_bytes())
            if size < per_buffer:
                continue
            if executor is None:
                runs.append(_done(writer.write(buffer, 0)))
            else:
                # Bound the number of buffers held by pending writers.
                while len(in_flight) >= parallelism - 1:
                    in_flight.pop(0)[0].result()
                future = executor.submit(writer.write, buffer, 0)
                runs.append(future)
                in_flight.append((future, size))
            buffer, size = [], 0
        return [future.result() for future in runs], buffer
    finally:
        if executor is not None:
            executor.shutdown(wait=True)


def _done(path: Path) -> "Future[Path]":
    future: Future[Path] = Future()
    future.set_result(path)
    return future


def sort_file(
    src: Path,
    dest: Path,
    spec: SortSpec,
    *,
    codec: str | None = None,
    stage: str = "sort",
) -> SortStats:
    """Sort a keyed TSV file into dest (codec inferred from suffixes when None)."""
    stats = SortStats()
    with open_text(src, "r") as fin, open_text(dest, "w", codec) as fout:
        for line in external_sort(fin, spec, codec=codec or "none", stage=stage, stats=stats):
            fout.write(line + "\n")
    return stats
