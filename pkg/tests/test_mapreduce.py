"""Tests for the keyed-line sort and group engine."""

from collections.abc import Iterator
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refgraph.codec import open_text
from refgraph.config import SortSpec
from refgraph.exceptions import ConfigurationError, SortError
from refgraph.mapreduce import (
    GroupStats,
    MapStats,
    SortStats,
    escape_field,
    external_sort,
    group_reduce,
    iter_groups,
    join_fields,
    map_to_tsv,
    sort_file,
    split_fields,
    take_capped,
    unescape_field,
)
from refgraph.mapreduce import sort as sort_module

keys = st.text(alphabet="abcdefxyz0123é", min_size=1, max_size=4)
values = st.text(alphabet="abc\t\n\\ ü", max_size=6)


def keyed(pairs: list[tuple[str, str]]) -> list[str]:
    return [join_fields((k, v)) for k, v in pairs]


def expected_order(lines: list[str]) -> list[str]:
    return sorted(lines, key=lambda line: (line.split("\t", 1)[0], line))


class TestEscaping:
    """Test field escaping."""

    def test_special_characters(self) -> None:
        assert escape_field("a\tb\nc\\d\re") == "a\\tb\\nc\\\\d\\re"
        assert unescape_field("a\\tb\\nc\\\\d\\re") == "a\tb\nc\\d\re"

    def test_plain_text_untouched(self) -> None:
        assert escape_field("plain") == "plain"
        assert unescape_field("plain") == "plain"

    @given(st.lists(st.text(), min_size=1, max_size=4))
    def test_fields_survive_joining(self, fields: list[str]) -> None:
        """Escaped fields contain no separators and split back exactly."""
        line = join_fields(fields)
        assert "\n" not in line and "\r" not in line
        assert split_fields(line) == fields


class TestMapToTsv:
    """Test mapping records to keyed lines."""

    def test_one_line_per_key(self) -> None:
        stats = MapStats()
        keyless: list[str] = []
        lines = list(map_to_tsv(
            ["ab", "", "cd"],
            key_fn=lambda r: [r, r.upper()] if r else None,
            payload_fn=lambda r: (r, "x\ty"),
            stats=stats,
            side_channel=keyless.append,
        ))

        assert lines == ["ab\tab\tx\\ty", "AB\tab\tx\\ty", "cd\tcd\tx\\ty", "CD\tcd\tx\\ty"]
        assert keyless == [""]
        assert stats.records == 3
        assert stats.lines == 4
        assert stats.skipped == 1

    def test_default_payload_uses_to_json(self) -> None:
        class Record:
            def to_json(self) -> str:
                return '{"a":1}'

        assert list(map_to_tsv([Record()], key_fn=lambda r: "k")) == ['k\t{"a":1}']


class TestExternalSort:
    """Test the external sort."""

    def test_in_memory(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path)
        lines = ["b\t2", "a\t1", "c\t3", "a\t0"]
        stats = SortStats()

        assert list(external_sort(lines, spec, stats=stats)) == ["a\t0", "a\t1", "b\t2", "c\t3"]
        assert stats.runs == 0
        assert stats.lines == 4

    def test_spilled_equals_sorted(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path)
        lines = [f"{(i * 7919) % 101:03d}\tvalue-{i}" for i in range(500)]
        stats = SortStats()

        result = list(external_sort(lines, spec, buffer_bytes=4096, stats=stats))

        assert result == expected_order(lines)
        assert stats.runs > 1

    def test_multi_pass_merge(self, tmp_path: Path) -> None:
        """More runs than the fan-in need intermediate merge passes."""
        spec = SortSpec(tmp_dir=tmp_path)
        lines = [f"{(i * 31) % 200:04d}\t{i}" for i in range(200)]
        stats = SortStats()

        result = list(external_sort(lines, spec, buffer_bytes=1, stats=stats))

        assert result == expected_order(lines)
        assert stats.runs == 200
        assert stats.merge_passes == 1

    def test_parallel_writers(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path, parallelism=3)
        lines = [f"k{(i * 13) % 97:02d}\t{i}" for i in range(1000)]
        stats = SortStats()
        budget = 8192

        result = list(external_sort(lines, spec, buffer_bytes=budget, stats=stats))

        assert result == expected_order(lines)
        assert stats.runs > 3
        largest_entry = max(sort_module._entry_size(sort_module._entry(line)) for line in lines)
        assert stats.peak_buffer_bytes <= budget + spec.parallelism * largest_entry

    @pytest.mark.parametrize("codec", ["zstd", "gzip", "none"])
    def test_compressed_runs(self, tmp_path: Path, codec: str) -> None:
        spec = SortSpec(tmp_dir=tmp_path)
        lines = [f"{i % 17}\tü-{i}" for i in range(300)]

        result = list(external_sort(lines, spec, codec=codec, buffer_bytes=2048))

        assert result == expected_order(lines)

    def test_unstable_sorts_by_key_only(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path, stable=False)
        lines = [f"{i % 5}\t{i}" for i in range(100)]

        result = list(external_sort(lines, spec, buffer_bytes=512))

        assert [line.split("\t")[0] for line in result] == sorted(str(i % 5) for i in range(100))
        assert sorted(result) == sorted(lines)

    def test_trailing_newlines_stripped(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path)
        assert list(external_sort(["b\t1\n", "a\t2\n"], spec)) == ["a\t2", "b\t1"]

    def test_runs_cleaned_up(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path)
        list(external_sort([f"{i}\tx" for i in range(100)], spec, buffer_bytes=256))
        assert list(tmp_path.iterdir()) == []

    def test_budget_below_minimum(self, tmp_path: Path) -> None:
        spec = SortSpec(memory_budget=1024, tmp_dir=tmp_path)
        with pytest.raises(ConfigurationError):
            list(external_sort(["a\t1"], spec))

    def test_unwritable_tmp_dir(self, tmp_path: Path) -> None:
        spec = SortSpec(tmp_dir=tmp_path / "missing")
        with pytest.raises(ConfigurationError):
            list(external_sort(["a\t1"], spec))

    def test_spill_failure(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """A failing run write surfaces as SortError and leaves no runs behind."""
        def disk_full(*args: object, **kwargs: object) -> Path:
            raise OSError(28, "No space left on device")

        monkeypatch.setattr(sort_module._RunWriter, "write", disk_full)
        spec = SortSpec(tmp_dir=tmp_path)

        with pytest.raises(SortError, match="No space left"):
            list(external_sort([f"{i}\tx" for i in range(50)], spec, buffer_bytes=64))
        assert list(tmp_path.iterdir()) == []

    def test_sort_file(self, tmp_path: Path) -> None:
        src = tmp_path / "in.tsv"
        dest = tmp_path / "out.tsv.zst"
        src.write_text("c\t1\na\t2\nb\t3\n", encoding="utf-8")
        work = tmp_path / "work"
        work.mkdir()

        stats = sort_file(src, dest, SortSpec(tmp_dir=work))

        with open_text(dest) as f:
            assert f.read() == "a\t2\nb\t3\nc\t1\n"
        assert stats.lines == 3

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(keys, values), max_size=120), st.integers(min_value=1, max_value=4))
    def test_matches_in_memory_sort(self, pairs: list[tuple[str, str]], parallelism: int) -> None:
        """Spilled, merged output equals an in-memory sort of the same lines."""
        lines = keyed(pairs)
        spec = SortSpec(parallelism=parallelism)
        assert list(external_sort(lines, spec, buffer_bytes=600)) == expected_order(lines)


class TestGrouping:
    """Test grouping and reducing."""

    def test_iter_groups(self) -> None:
        stats = GroupStats()
        groups = [
            (key, list(rest))
            for key, rest in iter_groups(["a\t1", "a\t2", "b\t3", "c\\tx\t4"], stats)
        ]

        assert groups == [("a", ["1", "2"]), ("b", ["3"]), ("c\tx", ["4"])]
        assert stats.groups == 3
        assert stats.lines == 4
        assert stats.largest_group == 2

    def test_unsorted_input(self) -> None:
        with pytest.raises(SortError):
            for _ in iter_groups(["b\t1", "a\t2"]):
                pass

    def test_unconsumed_groups_are_skipped(self) -> None:
        assert [key for key, _ in iter_groups(["a\t1", "a\t2", "b\t3"])] == ["a", "b"]

    def test_take_capped(self) -> None:
        assert take_capped(iter([1, 2, 3]), 3) == [1, 2, 3]
        rest = iter([1, 2, 3, 4])
        assert take_capped(rest, 3) is None
        assert list(rest) == []

    def test_group_reduce_counts(self) -> None:
        lines = ["a\t1", "a\t2", "b\t3"]
        result = list(group_reduce(lines, lambda key, rest: [(key, sum(int(v) for v in rest))]))
        assert result == [("a", 3), ("b", 3)]

    def test_failing_group_skipped(self) -> None:
        def reducer(key: str, rest: Iterator[str]) -> list[str]:
            if key == "bad":
                raise ValueError("broken group")
            return [key]

        stats = GroupStats()
        result = list(group_reduce(["bad\t1", "good\t2", "ok\t3"], reducer, stats=stats))

        assert result == ["good", "ok"]
        assert stats.failures == 1
        assert stats.groups == 3

    def test_sort_errors_propagate(self) -> None:
        with pytest.raises(SortError):
            list(group_reduce(["b\t1", "a\t1"], lambda key, rest: [key]))

    def test_concurrent_matches_sequential(self) -> None:
        lines = sorted(f"{i % 23:02d}\t{i}" for i in range(400))

        def reducer(key: str, rest: Iterator[str]) -> list[tuple[str, int]]:
            return [(key, len(list(rest)))]

        sequential = list(group_reduce(lines, reducer))
        concurrent = list(group_reduce(lines, reducer, workers=4, pure=True))
        assert concurrent == sequential

    def test_concurrent_hot_key_buffer_stops_at_cap(self) -> None:
        """A giant group reaches the worker cut at cap + 1 lines, never whole."""
        cap = 10
        handed_over: dict[str, int] = {}

        def lines() -> Iterator[str]:
            yield "a\t1"
            for i in range(200_000):
                yield f"hot\t{i}"
            yield "z\t1"

        def reducer(key: str, rest: Iterator[str]) -> list[str]:
            members = list(rest)
            handed_over[key] = len(members)
            return [key] if take_capped(iter(members), cap) is not None else []

        stats = GroupStats()
        result = list(
            group_reduce(lines(), reducer, stats=stats, workers=2, pure=True, cap=cap)
        )

        assert result == ["a", "z"]
        assert handed_over == {"a": 1, "hot": cap + 1, "z": 1}
        assert stats.lines == 200_002
        assert stats.largest_group == 200_000

    def test_concurrent_failures_counted(self) -> None:
        def reducer(key: str, rest: Iterator[str]) -> list[str]:
            if key.startswith("bad"):
                raise ValueError("broken group")
            return [key]

        lines = sorted(
            [f"bad{i:02d}\t1" for i in range(20)] + [f"ok{i:02d}\t1" for i in range(20)]
        )
        stats = GroupStats()
        result = list(group_reduce(lines, reducer, stats=stats, workers=4, pure=True))

        assert result == [f"ok{i:02d}" for i in range(20)]
        assert stats.failures == 20

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(keys, values), max_size=80))
    def test_sort_then_group_collects_every_line(self, pairs: list[tuple[str, str]]) -> None:
        """Grouping sorted output yields each key once with all its values."""
        lines = keyed(pairs)
        grouped = {
            key: sorted(rest)
            for key, rest in iter_groups(external_sort(lines, SortSpec(), buffer_bytes=300))
        }
        expected: dict[str, list[str]] = {}
        for key, value in pairs:
            expected.setdefault(key, []).append(escape_field(value))
        assert grouped == {key: sorted(vals) for key, vals in expected.items()}
