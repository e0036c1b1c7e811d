"""
Grouping and reducing of sorted keyed lines.

Reducers see each group as an iterator of the (escaped) line remainders
after the key, never as a materialized list; callers that need a list use
take_capped() to enforce the hot-key cap.
"""

import itertools
import logging
from collections import deque
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass
from typing import TypeVar

from refgraph.exceptions import SortError
from refgraph.mapreduce.tsv import split_key

logger = logging.getLogger(__name__)

T = TypeVar("T")

Reducer = Callable[[str, Iterator[str]], Iterable[T]]


@dataclass
class GroupStats:
    """
    Counts of one group/reduce pass.

    Attributes:
        groups: Distinct keys seen
        lines: Lines seen
        failures: Groups whose reducer raised (skipped)
        hot_keys: Groups skipped for exceeding the size cap
        largest_group: Size of the largest group
    """
    groups: int = 0
    lines: int = 0
    failures: int = 0
    hot_keys: int = 0
    largest_group: int = 0


def iter_groups(
    sorted_lines: Iterable[str], stats: GroupStats | None = None
) -> Iterator[tuple[str, Iterator[str]]]:
    """
    Stream contiguous key groups.

    Args:
        sorted_lines: Keyed lines sorted by key
        stats: Accumulates group and line counts

    Yields:
        (key, iterator over line remainders); a group iterator is only valid
        until the next group is requested

    Raises:
        SortError: If a key sorts before its predecessor
    """
    stats = stats if stats is not None else GroupStats()
    previous: list[str | None] = [None]

    def checked() -> Iterator[tuple[str, str]]:
        for line in sorted_lines:
            stats.lines += 1
            raw_key = line.split("\t", 1)[0]
            last = previous[0]
            if last is not None and raw_key < last:
                raise SortError(f"input not sorted: {raw_key!r} after {last!r}")
            previous[0] = raw_key
            yield raw_key, line

    for raw_key, group in itertools.groupby(checked(), key=lambda pair: pair[0]):
        stats.groups += 1
        key, _ = split_key(raw_key)
        yield key, _remainders(group, stats)


def _remainders(group: Iterator[tuple[str, str]], stats: GroupStats) -> Iterator[str]:
    size = 0
    for _, line in group:
        size += 1
        yield split_key(line)[1]
    stats.largest_group = max(stats.largest_group, size)


def take_capped(items: Iterator[T], cap: int) -> list[T] | None:
    """
    Materialize at most cap items.

    Returns:
        The items, or None when there are more than cap (the rest is drained)
    """
    taken = list(itertools.islice(items, cap + 1))
    if len(taken) > cap:
        for _ in items:
            pass
        return None
    return taken


def _reduce_one(
    reducer: Reducer[T], key: str, group: Iterator[str], stage: str
) -> list[T] | None:
    """Reducer outputs for one group, None when the reducer raised."""
    try:
        return list(reducer(key, group))
    except SortError:
        raise
    except Exception as e:
        logger.warning(f"{stage}: reducer failed on key {key!r}, group skipped: {e}")
        return None


def group_reduce(
    sorted_lines: Iterable[str],
    reducer: Reducer[T],
    *,
    stats: GroupStats | None = None,
    stage: str = "reduce",
    workers: int = 1,
    pure: bool = False,
    cap: int | None = None,
) -> Iterator[T]:
    """
    Apply a reducer once per key group and concatenate outputs in key order.

    A reducer that raises loses its group's output; the failure is logged
    and counted in stats.failures and the pass continues.

    Args:
        sorted_lines: Keyed lines sorted by key
        reducer: Called as reducer(key, iterator of line remainders)
        stats: Accumulates counts
        stage: Name used in log messages
        workers: Threads used when pure is True
        pure: The caller guarantees the reducer is safe to run on several
            threads at once, so groups may be reduced concurrently (groups
            are then buffered for the worker threads)
        cap: The reducer's group cap; buffered groups are cut at cap + 1 lines

    Yields:
        Reducer outputs, group by group in key order
    """
    stats = stats if stats is not None else GroupStats()
    groups = iter_groups(sorted_lines, stats)

    if not pure or workers <= 1:
        for key, group in groups:
            outputs = _reduce_one(reducer, key, group, stage)
            if outputs is None:
                stats.failures += 1
            else:
                yield from outputs
    else:
        yield from _reduce_concurrently(groups, reducer, stats, stage, workers, cap)

    if stats.failures:
        logger.warning(f"{stage}: {stats.failures} of {stats.groups} groups failed")


def _materialize(group: Iterator[str], cap: int | None) -> list[str]:
    """
    Buffer a group for a worker thread, holding at most cap + 1 lines.

    An oversized group is truncated to cap + 1 lines and the rest drained,
    so the reducer's own cap check still sees it as oversized.
    """
    if cap is None:
        return list(group)
    members = list(itertools.islice(group, cap + 1))
    if len(members) > cap:
        for _ in group:
            pass
    return members


def _reduce_concurrently(
    groups: Iterator[tuple[str, Iterator[str]]],
    reducer: Reducer[T],
    stats: GroupStats,
    stage: str,
    workers: int,
    cap: int | None,
) -> Iterator[T]:
    window = workers * 4
    with ThreadPoolExecutor(max_workers=workers) as executor:
        pending: deque[Future[list[T] | None]] = deque()

        def drain(future: Future[list[T] | None]) -> list[T]:
            outputs = future.result()
            if outputs is None:
                stats.failures += 1
                return []
            return outputs

        for key, group in groups:
            members = _materialize(group, cap)
            pending.append(executor.submit(_reduce_one, reducer, key, iter(members), stage))
            if len(pending) >= window:
                yield from drain(pending.popleft())
        while pending:
            yield from drain(pending.popleft())
