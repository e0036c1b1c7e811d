"""
Task definitions and content fingerprints.

A Task is what gets registered: a name, upstream task names, external input
files, parameters and an action. Planning resolves it into a TaskSpec whose
fingerprint covers the name, the parameters and the fingerprints of every
input; the output path is derived from that fingerprint, so an existing
output file is by construction up to date.
"""

import hashlib
import json
import os
from collections import Counter
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from refgraph.codec import open_text
from refgraph.config import PipelineConfig
from refgraph.types import dumps

FINGERPRINT_CHARS = 16


@dataclass
class TaskContext:
    """
    What an action sees while it runs.

    Attributes:
        spec: The resolved task
        config: Pipeline configuration
        inputs: Upstream task name → output artifact
        output: Temporary path the action must write; renamed on success
        counters: Accept/reject and other counts for the run report
    """
    spec: "TaskSpec"
    config: PipelineConfig
    inputs: dict[str, Path]
    output: Path
    counters: Counter = field(default_factory=Counter)

    def read_lines(self, path: Path) -> Iterator[str]:
        """Stream lines of an artifact or input file."""
        with open_text(path, "r") as f:
            for line in f:
                if line.strip():
                    yield line

    def read_json(self, dep: str) -> Iterator[dict[str, Any]]:
        """Stream JSON objects of an upstream artifact."""
        for line in self.read_lines(self.inputs[dep]):
            yield json.loads(line)

    def write_lines(self, lines: Iterable[str]) -> int:
        """Write lines to the output with the artifact's codec; returns the count."""
        count = 0
        with open_text(self.output, "w", self.spec.codec) as f:
            for line in lines:
                f.write(line + "\n")
                count += 1
        return count


Action = Callable[[TaskContext], None]


@dataclass
class Task:
    """
    A registered pipeline task.

    Attributes:
        name: Unique task name
        action: Writes the output from the inputs
        deps: Upstream task names
        inputs: External input files
        params: Settings that change the output (part of the fingerprint)
        suffix: Output file suffix, including the codec suffix
        codec: Output compression
    """
    name: str
    action: Action
    deps: list[str] = field(default_factory=list)
    inputs: list[Path] = field(default_factory=list)
    params: dict[str, Any] = field(default_factory=dict)
    suffix: str = ".jsonl"
    codec: str = "none"


@dataclass
class TaskSpec:
    """
    A task resolved against the current inputs.

    Attributes:
        name: Task name
        inputs: Upstream outputs followed by external input files
        output: Artifact path, derived from the fingerprint
        params: Task parameters
        fingerprint: Hash of (name, params, input fingerprints)
        deps: Upstream task names
        codec: Output compression
    """
    name: str
    inputs: list[Path]
    output: Path
    params: dict[str, Any]
    fingerprint: str
    deps: list[str] = field(default_factory=list)
    codec: str = "none"

    @property
    def is_fresh(self) -> bool:
        return self.output.exists()


_file_cache: dict[tuple[str, int, int], str] = {}


def fingerprint_file(path: Path) -> str:
    """SHA-256 of a file's content (cached per path, size and mtime)."""
    stat = os.stat(path)
    cache_key = (str(Path(path).resolve()), stat.st_size, stat.st_mtime_ns)
    cached = _file_cache.get(cache_key)
    if cached is not None:
        return cached
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    _file_cache[cache_key] = digest.hexdigest()
    return _file_cache[cache_key]


def fingerprint_task(name: str, params: dict[str, Any], input_fingerprints: list[str]) -> str:
    """Fingerprint of a task from its name, parameters and input fingerprints."""
    payload = dumps({"name": name, "params": params, "inputs": input_fingerprints})
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def output_path(work_dir: Path, name: str, fingerprint: str, suffix: str) -> Path:
    """Deterministic artifact path: ``<work_dir>/<name>-<fingerprint prefix><suffix>``."""
    return Path(work_dir) / f"{name}-{fingerprint[:FINGERPRINT_CHARS]}{suffix}"
