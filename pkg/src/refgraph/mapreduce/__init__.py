"""
Single-machine map/sort/group engine.

Records are mapped to keyed TSV lines, sorted with bounded memory and
grouped by key for per-group reduce functions.
"""

from refgraph.mapreduce.group import GroupStats, group_reduce, iter_groups, take_capped
from refgraph.mapreduce.sort import MERGE_FAN_IN, SortStats, external_sort, sort_file
from refgraph.mapreduce.tsv import (
    MapStats,
    escape_field,
    join_fields,
    line_key,
    map_to_tsv,
    split_fields,
    split_key,
    unescape_field,
)

__all__ = [
    "MERGE_FAN_IN",
    "GroupStats",
    "MapStats",
    "SortStats",
    "escape_field",
    "external_sort",
    "group_reduce",
    "iter_groups",
    "join_fields",
    "line_key",
    "map_to_tsv",
    "sort_file",
    "split_fields",
    "split_key",
    "take_capped",
    "unescape_field",
]
