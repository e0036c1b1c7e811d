"""Task graph registry and staleness planning."""

import logging
from collections.abc import Iterator
from dataclasses import dataclass, field
from pathlib import Path

from refgraph.exceptions import CycleError, PipelineError, UnknownTaskError
from refgraph.pipeline.tasks import (
    Task,
    TaskSpec,
    fingerprint_file,
    fingerprint_task,
    output_path,
)

logger = logging.getLogger(__name__)


class TaskGraph:
    """Registry of tasks keyed by name."""

    def __init__(self) -> None:
        self.tasks: dict[str, Task] = {}

    def add(self, task: Task) -> Task:
        if task.name in self.tasks:
            raise PipelineError(f"task {task.name} registered twice")
        self.tasks[task.name] = task
        logger.debug(f"Registered task: {task.name}")
        return task

    def get(self, name: str) -> Task:
        try:
            return self.tasks[name]
        except KeyError:
            raise UnknownTaskError(
                f"unknown task {name!r}, known: {', '.join(sorted(self.tasks))}"
            ) from None

    def __contains__(self, name: object) -> bool:
        return name in self.tasks

    def names(self) -> list[str]:
        return sorted(self.tasks)

    def closure(self, target: str) -> list[str]:
        """
        Target and all its upstream tasks, dependencies first.

        Raises:
            UnknownTaskError: If target or a dependency is not registered
            CycleError: If the dependencies form a cycle
        """
        order: list[str] = []
        done: set[str] = set()
        active: list[str] = []

        def visit(name: str) -> None:
            if name in done:
                return
            if name in active:
                cycle = " -> ".join([*active[active.index(name):], name])
                raise CycleError(f"dependency cycle: {cycle}")
            task = self.get(name)
            active.append(name)
            for dep in task.deps:
                visit(dep)
            active.pop()
            done.add(name)
            order.append(name)

        visit(target)
        return order


@dataclass
class Plan:
    """
    Stale tasks of a target in execution order.

    Attributes:
        target: Requested task
        tasks: Stale tasks to run, dependencies first
        resolved: Every task of the target's closure, fresh or stale
    """
    target: str
    tasks: list[TaskSpec] = field(default_factory=list)
    resolved: dict[str, TaskSpec] = field(default_factory=dict)

    def __iter__(self) -> Iterator[TaskSpec]:
        return iter(self.tasks)

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def names(self) -> list[str]:
        return [spec.name for spec in self.tasks]


def resolve(graph: TaskGraph, target: str, work_dir: Path) -> dict[str, TaskSpec]:
    """Fingerprint every task of the target's closure."""
    resolved: dict[str, TaskSpec] = {}
    for name in graph.closure(target):
        task = graph.get(name)
        for path in task.inputs:
            if not Path(path).is_file():
                raise PipelineError(f"task {name}: input file not found: {path}")
        fingerprints = [resolved[dep].fingerprint for dep in task.deps]
        fingerprints += [fingerprint_file(path) for path in task.inputs]
        fingerprint = fingerprint_task(name, task.params, fingerprints)
        resolved[name] = TaskSpec(
            name=name,
            inputs=[resolved[dep].output for dep in task.deps] + [Path(p) for p in task.inputs],
            output=output_path(work_dir, name, fingerprint, task.suffix),
            params=task.params,
            fingerprint=fingerprint,
            deps=list(task.deps),
            codec=task.codec,
        )
    return resolved


def plan(graph: TaskGraph, target: str, work_dir: Path) -> Plan:
    """
    Stale tasks needed to produce target, in topological order.

    A task is stale when its fingerprinted output does not exist. A stale
    task is planned when it is the target or a planned task depends on it,
    so fresh outputs shield their own upstream tasks.

    Raises:
        UnknownTaskError: Unknown target or dependency
        CycleError: Dependency cycle
        PipelineError: Missing input file
    """
    resolved = resolve(graph, target, work_dir)
    needed: set[str] = set()
    for name in reversed(list(resolved)):
        spec = resolved[name]
        if spec.is_fresh:
            continue
        if name == target or any(name in resolved[n].deps for n in needed):
            needed.add(name)
    tasks = [resolved[name] for name in resolved if name in needed]
    return Plan(target=target, tasks=tasks, resolved=resolved)
