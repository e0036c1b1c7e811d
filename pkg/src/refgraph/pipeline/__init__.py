"""
Task orchestration for derivation runs.

Stages declare their dependencies; outputs are cached under fingerprinted
names so only stale stages rerun.
"""

from refgraph.pipeline.graph import DEFAULT_TARGET, build_default_graph
from refgraph.pipeline.planner import Plan, TaskGraph, plan, resolve
from refgraph.pipeline.runner import RunReport, TaskReport, TaskState, run, run_task
from refgraph.pipeline.tasks import (
    Task,
    TaskContext,
    TaskSpec,
    fingerprint_file,
    fingerprint_task,
    output_path,
)

__all__ = [
    "DEFAULT_TARGET",
    "Plan",
    "RunReport",
    "Task",
    "TaskContext",
    "TaskGraph",
    "TaskReport",
    "TaskSpec",
    "TaskState",
    "build_default_graph",
    "fingerprint_file",
    "fingerprint_task",
    "output_path",
    "plan",
    "resolve",
    "run",
    "run_task",
]
