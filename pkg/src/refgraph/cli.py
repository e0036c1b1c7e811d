#!/usr/bin/env python3
"""
refgraph CLI - Command line interface for refgraph.

Commands:
    plan      - Print the stale tasks of a target
    run       - Execute a target and print the run report
    stats     - Match-count table of a fused BiblioRef file
    compare   - Compare an external DOI-DOI edge CSV with fused output
    weblinks  - Audit archive coverage of URLs cited by references
    verify    - Run the verifier on one pair or a labeled-pair file
"""

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.table import Table

from refgraph import __version__
from refgraph.config import PipelineConfig, SortSpec, WeblinkConfig
from refgraph.exceptions import RefgraphError

console = Console()
logger = logging.getLogger("refgraph.cli")


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(Path(args.config)) if args.config else PipelineConfig()
    config.apply_env()
    if getattr(args, "work_dir", None):
        config.work_dir = Path(args.work_dir)
    for name in ("releases", "refs", "wikipedia", "openlibrary", "external_edges"):
        value = getattr(args, name, None)
        if value:
            setattr(config.inputs, name, Path(value))
    if getattr(args, "workers", None):
        config.workers = args.workers
        config.sort.parallelism = args.workers
    return config


def _counters(counters: dict[str, int]) -> str:
    shown = [f"{k}={v}" for k, v in sorted(counters.items()) if k.startswith(("accepted", "rej"))]
    return " ".join(shown)


def cmd_plan(args: argparse.Namespace) -> int:
    """Print stale tasks in execution order."""
    from refgraph.pipeline import build_default_graph, plan

    config = _load_config(args)
    graph = build_default_graph(config)
    stale = plan(graph, args.target, config.work_dir)

    if not stale:
        console.print(f"[green]{args.target} is up to date[/green]")
        return 0
    table = Table(title=f"Plan for {args.target}")
    table.add_column("#", justify="right")
    table.add_column("Task")
    table.add_column("Fingerprint")
    table.add_column("Output")
    for number, spec in enumerate(stale, start=1):
        table.add_row(str(number), spec.name, spec.fingerprint[:16], spec.output.name)
    console.print(table)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    """Execute a target."""
    from refgraph.pipeline import build_default_graph, plan, run

    config = _load_config(args)
    config.work_dir.mkdir(parents=True, exist_ok=True)
    graph = build_default_graph(config)
    stale = plan(graph, args.target, config.work_dir)
    report = run(graph, stale, config)

    table = Table(title=f"Run {args.target} ({report.seconds:.2f}s)")
    table.add_column("Task")
    table.add_column("State")
    table.add_column("Seconds", justify="right")
    table.add_column("In bytes", justify="right")
    table.add_column("Out bytes", justify="right")
    table.add_column("Counts")
    for task in report.tasks:
        table.add_row(
            task.name,
            task.state.value,
            f"{task.seconds:.2f}",
            str(task.input_bytes),
            str(task.output_bytes),
            task.error or _counters(task.counters),
        )
    console.print(table)
    if not report.tasks:
        console.print(f"[green]{args.target} is up to date[/green]")

    if args.report:
        Path(args.report).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    output = stale.resolved[args.target].output
    if report.ok:
        console.print(f"Output: {output}")
    return report.exit_code


def cmd_stats(args: argparse.Namespace) -> int:
    """Print the match-count table."""
    from refgraph.fuse import match_stats, read_brefs, top_n, write_stats_tsv

    rows = match_stats(read_brefs(Path(args.bref)))
    if args.tsv:
        write_stats_tsv(rows, sys.stdout)
        return 0

    total = sum(row.count for row in rows)
    table = Table(title=f"Match counts ({total} references)")
    for column in ("provenance", "status", "reason"):
        table.add_column(column)
    table.add_column("count", justify="right")
    for row in top_n(rows, args.top):
        table.add_row(*row.to_row())
    console.print(table)
    return 0


def _report_table(report: Any) -> Table:
    table = Table(title="Edge set comparison")
    table.add_column("Set")
    table.add_column("Edges", justify="right")
    table.add_row("C (external)", f"{report.size_c:,}")
    table.add_row("R (produced)", f"{report.size_r:,}")
    table.add_row("C ∩ R", f"{report.overlap:,}")
    table.add_row("C \\ R", f"{report.only_c:,}")
    table.add_row("R \\ C", f"{report.only_r:,}")
    return table


def cmd_compare(args: argparse.Namespace) -> int:
    """Compare edge sets, or print the set arithmetic for given counts."""
    from refgraph.compare import (
        EdgeSetReport,
        bref_doi_edges,
        compare_edge_sets,
        read_edge_csv,
    )
    from refgraph.fuse import read_brefs

    if args.counts:
        size_c, size_r, overlap = args.counts
        console.print(_report_table(EdgeSetReport.from_counts(size_c, size_r, overlap)))
        return 0
    if not args.external or not args.bref:
        print("Error: compare needs EXTERNAL and BREF, or --counts C R OVERLAP", file=sys.stderr)
        return 2

    only_r = open(args.only_r, "w", encoding="utf-8") if args.only_r else None
    try:
        report = compare_edge_sets(
            read_edge_csv(Path(args.external), args.citing_column, args.cited_column),
            bref_doi_edges(read_brefs(Path(args.bref))),
            SortSpec.from_env(),
            only_r_sink=(lambda edge: only_r.write(f"{edge[0]},{edge[1]}\n")) if only_r else None,
        )
    finally:
        if only_r:
            only_r.close()

    console.print(_report_table(report))
    breakdown = report.prefix_breakdown
    if breakdown.total:
        prefixes = Table(title="Prefixes of R \\ C")
        prefixes.add_column("Prefix")
        prefixes.add_column("Either endpoint", justify="right")
        prefixes.add_column("Both endpoints", justify="right")
        prefixes.add_column("Share", justify="right")
        for prefix, either in sorted(breakdown.either.items()):
            prefixes.add_row(
                prefix,
                f"{either:,}",
                f"{breakdown.both.get(prefix, 0):,}",
                f"{breakdown.share(prefix):.1%}",
            )
        for prefix, count in breakdown.top:
            prefixes.add_row(prefix, f"{count:,}", "", f"{count / breakdown.total:.1%}")
        console.print(prefixes)
    if report.malformed_c or report.malformed_r:
        console.print(
            f"[yellow]Dropped malformed edges: C={report.malformed_c} R={report.malformed_r}"
        )
    if args.json:
        Path(args.json).write_text(json.dumps(dataclasses.asdict(report), indent=2) + "\n")
    return 0


def cmd_weblinks(args: argparse.Namespace) -> int:
    """Audit archive coverage of cited URLs."""
    import requests

    from refgraph.codec import open_text
    from refgraph.ingest import IngestStats, read_raw_references
    from refgraph.weblinks import audit_references, coverage_report, load_session

    base = PipelineConfig.from_file(Path(args.config)).weblinks if args.config else None
    overrides = {
        key: value for key, value in (
            ("rate", args.rate), ("timeout", args.timeout), ("fixtures", args.fixtures)
        ) if value is not None
    }
    config = dataclasses.replace(base or WeblinkConfig(), **overrides)
    session = load_session(config.fixtures) if config.fixtures else requests.Session()

    stats = IngestStats()
    with open_text(Path(args.refs), "r") as f:
        audits = audit_references(
            read_raw_references(f, stats),
            config,
            session=session,
            live_sample=args.sample,
            seed=args.seed,
        )
    if args.output:
        with open_text(Path(args.output), "w") as out:
            for audit in audits:
                out.write(audit.to_json() + "\n")

    report = coverage_report(audits)
    table = Table(title=f"Weblink coverage ({report.total} URLs)")
    table.add_column("Measure")
    table.add_column("Value", justify="right")
    for key, value in report.to_dict().items():
        table.add_row(key, f"{value:.3f}" if isinstance(value, float) else str(value))
    console.print(table)
    if stats.rejected:
        console.print(f"[yellow]{stats.rejected} reference lines rejected")
    return 0


def _record_arg(value: str) -> dict[str, Any]:
    text = value if value.lstrip().startswith("{") else Path(value).read_text(encoding="utf-8")
    data = json.loads(text)
    if not isinstance(data, dict):
        raise RefgraphError(f"not a JSON object: {value}")
    return data


def cmd_verify(args: argparse.Namespace) -> int:
    """Verify one pair of records, or a labeled-pair suite."""
    from refgraph.fuzzy import load_labeled_pairs, run_regression, verify
    from refgraph.ingest import release_from_mapping

    config = PipelineConfig.from_file(Path(args.config)).verify if args.config else None
    config = config or PipelineConfig().verify

    if args.suite:
        report = run_regression(load_labeled_pairs(Path(args.suite)), config)
        table = Table(title=f"Verification suite: {report.passed}/{report.total} passed")
        table.add_column("Line", justify="right")
        table.add_column("Expected")
        table.add_column("Got")
        for pair, result in report.failures:
            expected = pair.status.value + (f"/{pair.reason.value}" if pair.reason else "")
            table.add_row(str(pair.line), expected, f"{result.status.value}/{result.reason.value}")
        if report.failures:
            console.print(table)
        else:
            console.print(f"[green]{report.passed}/{report.total} pairs passed")
        return 0 if report.ok else 1

    if not args.a or not args.b:
        print("Error: verify needs two records, or --suite FILE", file=sys.stderr)
        return 2
    a = release_from_mapping(_record_arg(args.a), require_ident=False)
    b = release_from_mapping(_record_arg(args.b), require_ident=False)
    result = verify(a, b, config)
    console.print(f"{result.status.value}\t{result.reason.value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="refgraph",
        description="Derive and audit citation graphs on a single machine",
    )
    parser.add_argument(
        "--version", "-v",
        action="version",
        version=f"refgraph {__version__}",
    )
    parser.add_argument("--log-level", default="INFO", help="Logging level")
    parser.add_argument(
        "--log-format", choices=("rich", "kv"), default=None,
        help="Console (rich) or key=value lines (kv; default for run)",
    )

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    pipeline_args = argparse.ArgumentParser(add_help=False)
    pipeline_args.add_argument("target", nargs="?", default="stats", help="Task to build")
    pipeline_args.add_argument("--config", "-c", help="YAML configuration file")
    pipeline_args.add_argument("--work-dir", help="Artifact directory")
    pipeline_args.add_argument("--releases", help="Catalog release records")
    pipeline_args.add_argument("--refs", help="Raw references")
    pipeline_args.add_argument("--wikipedia", help="Wikipedia citation rows")
    pipeline_args.add_argument("--openlibrary", help="Open Library editions")
    pipeline_args.add_argument("--external-edges", help="External DOI-DOI edge CSV")

    # plan command
    plan_parser = subparsers.add_parser(
        "plan", parents=[pipeline_args], help="Print stale tasks of a target"
    )
    plan_parser.set_defaults(func=cmd_plan)

    # run command
    run_parser = subparsers.add_parser("run", parents=[pipeline_args], help="Execute a target")
    run_parser.add_argument("--workers", "-w", type=int, help="Concurrent tasks and sort writers")
    run_parser.add_argument("--report", help="Write the run report as JSON")
    run_parser.set_defaults(func=cmd_run)

    # stats command
    stats_parser = subparsers.add_parser("stats", help="Match-count table")
    stats_parser.add_argument("bref", help="Fused BiblioRef file")
    stats_parser.add_argument("--top", "-n", type=int, default=25, help="Rows shown")
    stats_parser.add_argument("--tsv", action="store_true", help="Print the full table as TSV")
    stats_parser.set_defaults(func=cmd_stats)

    # compare command
    compare_parser = subparsers.add_parser("compare", help="Compare edge sets")
    compare_parser.add_argument("external", nargs="?", help="External edge CSV")
    compare_parser.add_argument("bref", nargs="?", help="Fused BiblioRef file")
    compare_parser.add_argument(
        "--counts", nargs=3, type=int, metavar=("C", "R", "OVERLAP"),
        help="Only print the set arithmetic for given sizes",
    )
    compare_parser.add_argument("--citing-column", default="citing")
    compare_parser.add_argument("--cited-column", default="cited")
    compare_parser.add_argument("--only-r", help="Write edges only in the produced set as CSV")
    compare_parser.add_argument("--json", help="Write the report as JSON")
    compare_parser.set_defaults(func=cmd_compare)

    # weblinks command
    weblinks_parser = subparsers.add_parser("weblinks", help="Audit cited URLs")
    weblinks_parser.add_argument("refs", help="Raw references")
    weblinks_parser.add_argument("--config", "-c", help="YAML configuration file")
    weblinks_parser.add_argument("--rate", type=float, help="Requests per second per host")
    weblinks_parser.add_argument("--timeout", type=float, help="Request timeout in seconds")
    weblinks_parser.add_argument("--fixtures", help="Recorded responses instead of the network")
    weblinks_parser.add_argument("--sample", type=int, help="Live-check a sample of N URLs")
    weblinks_parser.add_argument("--seed", type=int, default=0, help="Sampler seed")
    weblinks_parser.add_argument("--output", "-o", help="Write audits as JSON lines")
    weblinks_parser.set_defaults(func=cmd_weblinks)

    # verify command
    verify_parser = subparsers.add_parser("verify", help="Run the verifier")
    verify_parser.add_argument("a", nargs="?", help="First record (JSON file or inline JSON)")
    verify_parser.add_argument("b", nargs="?", help="Second record (JSON file or inline JSON)")
    verify_parser.add_argument("--suite", help="Labeled-pair TSV file")
    verify_parser.add_argument("--config", "-c", help="YAML configuration file")
    verify_parser.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    from refgraph.logging_setup import setup_logging

    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 0

    log_format = args.log_format or ("kv" if args.command == "run" else "rich")
    setup_logging(args.log_level, structured=log_format == "kv")

    try:
        return int(args.func(args))
    except (RefgraphError, OSError, json.JSONDecodeError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
