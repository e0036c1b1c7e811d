"""
The default derivation graph.

    releases ─┬─> exact ─┐
    refs ─────┼─> fuzzy ─┼─> bref ─┬─> stats
              │          │         ├─> edgetypes
              ├─> wikipedia ┘      └─> compare
              └─> openlibrary ┘

releases and refs normalize the raw inputs into JSON lines artifacts;
wikipedia, openlibrary and compare are registered only when their inputs
are configured.
"""

import dataclasses
import json
from collections.abc import Callable, Iterator
from pathlib import Path
from typing import Any

from refgraph import __version__
from refgraph.codec import open_text, suffix_for
from refgraph.compare import bref_doi_edges, compare_edge_sets, read_edge_csv
from refgraph.config import PipelineConfig, VerifyConfig
from refgraph.exactmatch import ExactStats, run_exact
from refgraph.exceptions import ConfigurationError
from refgraph.extensions import (
    EdgeType,
    ExtensionStats,
    TypedEdge,
    collapse_per_work,
    edge_type_counts,
    match_openlibrary,
    match_wikipedia,
    typed_edges,
)
from refgraph.fuse import FuseStats, fuse, match_stats, read_brefs, write_stats_tsv
from refgraph.fuzzy import FuzzyStats, run_fuzzy
from refgraph.ingest import (
    IngestStats,
    parse_openlibrary_edition,
    parse_release,
    parse_wikipedia_row,
    read_raw_references,
    read_records,
    reference_from_mapping,
    release_from_mapping,
)
from refgraph.pipeline.planner import TaskGraph
from refgraph.pipeline.tasks import Task, TaskContext
from refgraph.types import BiblioRef, RawReference, ReleaseRecord

DEFAULT_TARGET = "stats"


def _input_lines(path: Path) -> Iterator[str]:
    with open_text(path, "r") as f:
        yield from f


def _count_ingest(ctx: TaskContext, stats: IngestStats) -> None:
    ctx.counters["lines"] += stats.total
    ctx.counters["accepted"] += stats.accepted
    ctx.counters["rejected"] += stats.rejected
    for reason, count in stats.reasons.items():
        ctx.counters[f"rejected:{reason}"] += count


def _count(ctx: TaskContext, stats: Any) -> None:
    for f in dataclasses.fields(stats):
        name, value = f.name, getattr(stats, f.name)
        if isinstance(value, int):
            ctx.counters[name] += value
        elif isinstance(value, dict):
            for key, count in value.items():
                ctx.counters[f"{name}:{key}"] += count


def _releases(ctx: TaskContext, dep: str = "releases") -> Iterator[ReleaseRecord]:
    for data in ctx.read_json(dep):
        yield release_from_mapping(data)


def _refs(ctx: TaskContext, dep: str = "refs") -> Iterator[RawReference]:
    for data in ctx.read_json(dep):
        yield reference_from_mapping(data)


def _brefs(ctx: TaskContext, dep: str) -> Iterator[BiblioRef]:
    yield from read_brefs(ctx.inputs[dep])


def _verify_params(verify: VerifyConfig) -> dict[str, Any]:
    params = dataclasses.asdict(verify)
    params["slug_stoplist"] = sorted(verify.slug_stoplist)
    return params


# --- actions ---

def ingest_releases(ctx: TaskContext) -> None:
    stats = IngestStats()
    records = read_records(_input_lines(ctx.spec.inputs[0]), parse_release, stats)
    ctx.write_lines(record.to_json() for record in records)
    _count_ingest(ctx, stats)


def ingest_refs(ctx: TaskContext) -> None:
    stats = IngestStats()
    refs = read_raw_references(_input_lines(ctx.spec.inputs[0]), stats)
    ctx.write_lines(ref.to_json() for ref in refs)
    _count_ingest(ctx, stats)


def exact_edges(ctx: TaskContext) -> None:
    config = ctx.config
    stats = ExactStats()
    edges = run_exact(
        _refs(ctx), _releases(ctx), config.sort,
        codec=config.codec, cap=config.group_cap, stats=stats,
        workers=config.sort.parallelism,
    )
    ctx.write_lines(edge.to_json() for edge in edges)
    _count(ctx, stats)


def fuzzy_edges(ctx: TaskContext) -> None:
    config = ctx.config
    stats = FuzzyStats()
    edges = run_fuzzy(
        _refs(ctx), _releases(ctx), config.sort,
        config=config.verify, codec=config.codec, cap=config.group_cap, stats=stats,
        workers=config.sort.parallelism,
    )
    ctx.write_lines(edge.to_json() for edge in edges)
    _count(ctx, stats)


def wikipedia_edges(ctx: TaskContext) -> None:
    config = ctx.config
    ingest = IngestStats()
    stats = ExtensionStats()
    rows = read_records(_input_lines(ctx.spec.inputs[-1]), parse_wikipedia_row, ingest)
    edges = match_wikipedia(
        rows, _releases(ctx), config.sort,
        config=config.verify, codec=config.codec, cap=config.group_cap, stats=stats,
    )
    ctx.write_lines(edge.to_json() for edge in edges)
    _count_ingest(ctx, ingest)
    _count(ctx, stats)


def openlibrary_edges(ctx: TaskContext) -> None:
    config = ctx.config
    ingest = IngestStats()
    stats = ExtensionStats()
    editions = read_records(
        _input_lines(ctx.spec.inputs[-1]), parse_openlibrary_edition, ingest
    )
    edges = match_openlibrary(
        _refs(ctx), editions, config.sort,
        config=config.verify, codec=config.codec, cap=config.group_cap, stats=stats,
    )
    ctx.write_lines(edge.to_json() for edge in edges)
    _count_ingest(ctx, ingest)
    _count(ctx, stats)


def fuse_edges(ctx: TaskContext) -> None:
    config = ctx.config
    stats = FuseStats()

    def candidates() -> Iterator[BiblioRef]:
        for dep in ctx.spec.deps:
            if dep != "refs":
                yield from _brefs(ctx, dep)

    final = fuse(candidates(), _refs(ctx), config.sort, codec=config.codec, stats=stats)
    ctx.write_lines(edge.to_json() for edge in final)
    _count(ctx, stats)


def stats_table(ctx: TaskContext) -> None:
    rows = match_stats(_brefs(ctx, "bref"))
    write_stats_tsv(rows, ctx.output)
    ctx.counters["rows"] = len(rows)


def edge_type_table(ctx: TaskContext) -> None:
    rows = edge_type_counts(typed_edges(_brefs(ctx, "bref")))
    if "openlibrary" in ctx.inputs:
        collapse = collapse_per_work(
            TypedEdge(
                edge_type=EdgeType(data["edge_type"]),
                bref=BiblioRef.from_dict(data),
                target_work=data.get("target_work"),
            )
            for data in ctx.read_json("openlibrary")
        )
        rows += [
            ("openlibrary-per-edition", collapse.per_edition),
            ("openlibrary-per-work", collapse.per_work),
        ]
    ctx.write_lines(f"{name}\t{count}" for name, count in [("edge_type", "count"), *rows])
    ctx.counters.update({name: count for name, count in rows})


def compare_report(ctx: TaskContext) -> None:
    config = ctx.config
    external = read_edge_csv(
        ctx.spec.inputs[-1], config.inputs.citing_column, config.inputs.cited_column
    )
    report = compare_edge_sets(
        external, bref_doi_edges(_brefs(ctx, "bref")), config.sort, codec=config.codec
    )
    with open_text(ctx.output, "w", "none") as f:
        f.write(json.dumps(dataclasses.asdict(report), indent=2, sort_keys=True) + "\n")
    ctx.counters.update({
        "size_c": report.size_c,
        "size_r": report.size_r,
        "overlap": report.overlap,
    })


# --- wiring ---

def build_default_graph(config: PipelineConfig) -> TaskGraph:
    """
    Register the derivation tasks for a configuration.

    Raises:
        ConfigurationError: If the releases or refs input is not configured
    """
    inputs = config.inputs
    if inputs.releases is None or inputs.refs is None:
        raise ConfigurationError("inputs.releases and inputs.refs are required")

    suffix = ".jsonl" + suffix_for(config.codec)
    matching = {
        "version": __version__,
        "codec": config.codec,
        "group_cap": config.group_cap,
        "verify": _verify_params(config.verify),
    }
    graph = TaskGraph()

    def add(
        name: str,
        action: Callable[[TaskContext], None],
        deps: list[str],
        files: list[Path] | None = None,
        params: dict[str, Any] | None = None,
        task_suffix: str = suffix,
    ) -> None:
        graph.add(Task(
            name=name,
            action=action,
            deps=deps,
            inputs=files or [],
            params=params or {"version": __version__, "codec": config.codec},
            suffix=task_suffix,
            codec=config.codec if task_suffix == suffix else "none",
        ))

    add("releases", ingest_releases, [], [inputs.releases])
    add("refs", ingest_refs, [], [inputs.refs])
    add("exact", exact_edges, ["releases", "refs"], params=matching)
    add("fuzzy", fuzzy_edges, ["releases", "refs"], params=matching)

    fused = ["exact", "fuzzy"]
    if inputs.wikipedia is not None:
        add("wikipedia", wikipedia_edges, ["releases"], [inputs.wikipedia], params=matching)
        fused.append("wikipedia")
    if inputs.openlibrary is not None:
        add("openlibrary", openlibrary_edges, ["refs"], [inputs.openlibrary], params=matching)
        fused.append("openlibrary")
    add("bref", fuse_edges, [*fused, "refs"])

    add("stats", stats_table, ["bref"], task_suffix=".tsv")
    edge_deps = ["bref", "openlibrary"] if inputs.openlibrary is not None else ["bref"]
    add("edgetypes", edge_type_table, edge_deps, task_suffix=".tsv")
    if inputs.external_edges is not None:
        add(
            "compare", compare_report, ["bref"], [inputs.external_edges],
            params={
                "version": __version__,
                "citing_column": inputs.citing_column,
                "cited_column": inputs.cited_column,
            },
            task_suffix=".json",
        )
    return graph
