"""
Plan execution.

Ready tasks run concurrently up to the worker limit. Every action writes to
a temporary file next to its artifact, which is renamed into place only on
success; a failed task leaves no output behind and everything downstream of
it is skipped.
"""

import logging
import os
import time
from collections import Counter
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from refgraph.config import PipelineConfig
from refgraph.exceptions import RefgraphError, TaskFailedError
from refgraph.pipeline.planner import Plan, TaskGraph
from refgraph.pipeline.tasks import TaskContext, TaskSpec

logger = logging.getLogger(__name__)


class TaskState(str, Enum):
    DONE = "done"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass
class TaskReport:
    """
    Outcome of one task.

    Attributes:
        name: Task name
        state: done, failed or skipped
        seconds: Wall time of the action
        input_bytes: Total size of the inputs
        output_bytes: Size of the artifact
        counters: Accept/reject and other counts recorded by the action
        error: Failure message
    """
    name: str
    state: TaskState
    seconds: float = 0.0
    input_bytes: int = 0
    output_bytes: int = 0
    counters: dict[str, int] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "name": self.name,
            "state": self.state.value,
            "seconds": round(self.seconds, 3),
            "input_bytes": self.input_bytes,
            "output_bytes": self.output_bytes,
            "counters": dict(sorted(self.counters.items())),
        }
        if self.error:
            data["error"] = self.error
        return data


@dataclass
class RunReport:
    """Per-task reports of one run, in completion order."""
    target: str
    tasks: list[TaskReport] = field(default_factory=list)
    seconds: float = 0.0

    def get(self, name: str) -> TaskReport | None:
        return next((t for t in self.tasks if t.name == name), None)

    @property
    def failed(self) -> list[str]:
        return [t.name for t in self.tasks if t.state == TaskState.FAILED]

    @property
    def skipped(self) -> list[str]:
        return [t.name for t in self.tasks if t.state == TaskState.SKIPPED]

    @property
    def ok(self) -> bool:
        return not self.failed and not self.skipped

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def raise_for_failure(self) -> None:
        """
        Raises:
            TaskFailedError: For the first failed task
        """
        for task in self.tasks:
            if task.state == TaskState.FAILED:
                raise TaskFailedError(task.name, task.error or "unknown error")

    def to_dict(self) -> dict[str, Any]:
        return {
            "target": self.target,
            "seconds": round(self.seconds, 3),
            "tasks": [t.to_dict() for t in self.tasks],
        }


def _size(path: Path) -> int:
    try:
        return path.stat().st_size
    except OSError:
        return 0


def _tmp_path(output: Path) -> Path:
    return output.with_name(f".{output.name}.tmp-{os.getpid()}")


def run_task(graph: TaskGraph, spec: TaskSpec, config: PipelineConfig, plan: Plan) -> TaskReport:
    """
    Run one task's action and move its output into place.

    Returns:
        A done or failed report; exceptions from the action are captured
    """
    task = graph.get(spec.name)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    tmp = _tmp_path(spec.output)
    ctx = TaskContext(
        spec=spec,
        config=config,
        inputs={dep: plan.resolved[dep].output for dep in spec.deps},
        output=tmp,
        counters=Counter(),
    )
    report = TaskReport(
        name=spec.name,
        state=TaskState.DONE,
        input_bytes=sum(_size(p) for p in spec.inputs),
    )
    logger.info(f"task {spec.name}: started")
    start = time.perf_counter()
    try:
        task.action(ctx)
        if not tmp.exists():
            raise RefgraphError("action wrote no output")
        os.replace(tmp, spec.output)
    except Exception as e:
        report.state = TaskState.FAILED
        report.error = f"{type(e).__name__}: {e}"
        logger.error(str(TaskFailedError(spec.name, report.error)))
        tmp.unlink(missing_ok=True)
    report.seconds = time.perf_counter() - start
    report.counters = dict(ctx.counters)
    if report.state == TaskState.DONE:
        report.output_bytes = _size(spec.output)
        logger.info(
            f"task {spec.name}: done in {report.seconds:.2f}s, {report.output_bytes} bytes"
        )
    return report


def run(
    graph: TaskGraph,
    plan: Plan,
    config: PipelineConfig,
    *,
    workers: int | None = None,
) -> RunReport:
    """
    Execute a plan.

    Args:
        graph: Registry holding the task actions
        plan: Stale tasks in topological order
        config: Pipeline configuration handed to the actions
        workers: Concurrent tasks (config.workers when None)

    Returns:
        RunReport; exit_code is nonzero when any task failed or was skipped
    """
    workers = max(1, workers or config.workers)
    report = RunReport(target=plan.target)
    pending = {spec.name: spec for spec in plan.tasks}
    planned = set(pending)
    finished: set[str] = set()
    start = time.perf_counter()

    def ready() -> list[TaskSpec]:
        return [
            spec for spec in pending.values()
            if all(dep in finished or dep not in planned for dep in spec.deps)
        ]

    def skip_downstream(failed: str) -> None:
        changed = True
        doomed = {failed}
        while changed:
            changed = False
            for name, spec in list(pending.items()):
                if any(dep in doomed for dep in spec.deps):
                    doomed.add(name)
                    del pending[name]
                    report.tasks.append(TaskReport(
                        name=name,
                        state=TaskState.SKIPPED,
                        error=f"upstream task {failed} failed",
                    ))
                    logger.warning(f"task {name}: skipped, upstream {failed} failed")
                    changed = True

    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="refgraph-task") as pool:
        running: dict[Future[TaskReport], str] = {}
        while pending or running:
            for spec in ready():
                if len(running) >= workers:
                    break
                del pending[spec.name]
                running[pool.submit(run_task, graph, spec, config, plan)] = spec.name
            if not running:
                break
            done, _ = wait(running, return_when=FIRST_COMPLETED)
            for future in done:
                name = running.pop(future)
                task_report = future.result()
                report.tasks.append(task_report)
                if task_report.state == TaskState.DONE:
                    finished.add(name)
                else:
                    skip_downstream(name)

    report.seconds = time.perf_counter() - start
    if report.failed:
        logger.error(f"run {plan.target}: failed tasks {', '.join(report.failed)}")
    else:
        logger.info(f"run {plan.target}: {len(report.tasks)} tasks in {report.seconds:.2f}s")
    return report
