"""Configuration management for refgraph."""

import os
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from refgraph.exceptions import ConfigurationError

MIB = 1024 * 1024
MIN_MEMORY_BUDGET = 64 * MIB

CODECS = ("zstd", "gzip", "none")


@dataclass
class SortSpec:
    """
    External sort settings.

    Attributes:
        memory_budget: Bytes of line buffers the sorter may hold at once
        tmp_dir: Directory for spill runs (system temp dir if None)
        parallelism: Number of concurrent run writers
        stable: Secondary sort on the full line, for byte-identical reruns
    """

    memory_budget: int = 256 * MIB
    tmp_dir: Path | None = None
    parallelism: int = 1
    stable: bool = True

    def validate(self) -> None:
        """
        Check the sort settings.

        Raises:
            ConfigurationError: If the budget is below 64 MiB, parallelism is
                not positive, or tmp_dir is not a writable directory
        """
        if self.memory_budget < MIN_MEMORY_BUDGET:
            raise ConfigurationError(
                f"memory_budget must be at least {MIN_MEMORY_BUDGET} bytes, "
                f"got {self.memory_budget}"
            )
        if self.parallelism < 1:
            raise ConfigurationError(f"parallelism must be >= 1, got {self.parallelism}")
        tmp = self.resolved_tmp_dir()
        if not tmp.is_dir() or not os.access(tmp, os.W_OK):
            raise ConfigurationError(f"tmp_dir is not a writable directory: {tmp}")

    def resolved_tmp_dir(self) -> Path:
        """Return tmp_dir, falling back to the system temporary directory."""
        return Path(self.tmp_dir) if self.tmp_dir else Path(tempfile.gettempdir())

    @classmethod
    def from_env(cls) -> "SortSpec":
        """
        Create sort settings from environment variables.

        Reads:
        - REFGRAPH_TMPDIR: spill directory
        - REFGRAPH_WORKERS: run writer parallelism
        - REFGRAPH_MEMORY: memory budget in MiB

        Returns:
            SortSpec with values from environment or defaults
        """
        tmp = os.getenv("REFGRAPH_TMPDIR")
        return cls(
            memory_budget=int(os.getenv("REFGRAPH_MEMORY", "256")) * MIB,
            tmp_dir=Path(tmp) if tmp else None,
            parallelism=int(os.getenv("REFGRAPH_WORKERS", "1")),
        )


DEFAULT_SLUG_STOPLIST = frozenset({
    "abstracts",
    "acknowledgements",
    "acknowledgments",
    "announcements",
    "authorindex",
    "bookreviews",
    "commentary",
    "conclusion",
    "conclusions",
    "contents",
    "contributors",
    "correction",
    "corrigendum",
    "discussion",
    "editorial",
    "editorialboard",
    "editorsnote",
    "erratum",
    "foreword",
    "frontmatter",
    "backmatter",
    "index",
    "introduction",
    "lettertotheeditor",
    "news",
    "obituary",
    "preface",
    "references",
    "reply",
    "response",
    "retraction",
    "reviews",
    "subjectindex",
    "tableofcontents",
})


@dataclass
class VerifyConfig:
    """
    Thresholds of the rule based verification cascade.

    Attributes:
        jaccard_strong: Author Jaccard similarity for a strong match
        jaccard_floor: Below this, same-slug pairs count as different works
        year_slack: Largest tolerated publication year difference
        slug_min_length: Shortest title slug accepted as a key
        author_token_min_length: Shortest author token kept
        slug_stoplist: Title slugs too generic to verify
    """

    jaccard_strong: float = 0.5
    jaccard_floor: float = 0.2
    year_slack: int = 2
    slug_min_length: int = 5
    author_token_min_length: int = 2
    slug_stoplist: frozenset[str] = DEFAULT_SLUG_STOPLIST

    def __post_init__(self) -> None:
        if not isinstance(self.slug_stoplist, frozenset):
            self.slug_stoplist = frozenset(self.slug_stoplist)
        if not 0.0 <= self.jaccard_floor <= self.jaccard_strong <= 1.0:
            raise ConfigurationError(
                "expected 0 <= jaccard_floor <= jaccard_strong <= 1, "
                f"got {self.jaccard_floor} and {self.jaccard_strong}"
            )


@dataclass
class WeblinkConfig:
    """
    Archive lookup and live check settings.

    Attributes:
        cdx_endpoint: CDX API URL
        rate: Requests per second per host
        timeout: Per-request timeout in seconds
        retries: Attempts before a lookup is recorded as failed
        backoff: Base delay in seconds, doubled on each retry
        max_redirects: Redirect depth followed by live checks
        max_in_flight: Concurrent live requests
        fixtures: Recorded request/response map used instead of the network
        user_agent: User-Agent header sent with every request
    """

    cdx_endpoint: str = "https://web.archive.org/cdx/search/cdx"
    rate: float = 1.0
    timeout: float = 10.0
    retries: int = 3
    backoff: float = 1.0
    max_redirects: int = 5
    max_in_flight: int = 8
    fixtures: Path | None = None
    user_agent: str = "refgraph/0.1 (link audit)"

    def __post_init__(self) -> None:
        if self.rate <= 0:
            raise ConfigurationError(f"rate must be > 0, got {self.rate}")
        if self.retries < 1:
            raise ConfigurationError(f"retries must be >= 1, got {self.retries}")
        if self.fixtures is not None:
            self.fixtures = Path(self.fixtures)


@dataclass
class InputPaths:
    """
    Input files of a derivation run. Only releases and refs are required.

    Attributes:
        releases: Catalog release records (NDJSON)
        refs: Raw references (NDJSON)
        wikipedia: Pre-extracted Wikipedia citation rows (NDJSON)
        openlibrary: Open Library editions (NDJSON)
        external_edges: External DOI-DOI citation CSV (e.g. COCI)
        citing_column: Citing DOI column of the external CSV
        cited_column: Cited DOI column of the external CSV
    """

    releases: Path | None = None
    refs: Path | None = None
    wikipedia: Path | None = None
    openlibrary: Path | None = None
    external_edges: Path | None = None
    citing_column: str = "citing"
    cited_column: str = "cited"

    def __post_init__(self) -> None:
        for name in ("releases", "refs", "wikipedia", "openlibrary", "external_edges"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))


@dataclass
class PipelineConfig:
    """
    Main derivation configuration.

    Can be loaded from a YAML file and overridden from the environment.

    Attributes:
        work_dir: Directory holding all stage artifacts
        codec: Compression for intermediates and outputs (zstd, gzip, none)
        group_cap: Largest key group processed before it is skipped as hot
        workers: Concurrent ready tasks
        stats_top: Rows printed by stats reports
        sort: External sort settings
        verify: Verification thresholds
        weblinks: Link audit settings
        inputs: Input files
    """

    work_dir: Path = Path("work")
    codec: str = "zstd"
    group_cap: int = 10_000
    workers: int = 1
    stats_top: int = 25
    sort: SortSpec = field(default_factory=SortSpec)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    weblinks: WeblinkConfig = field(default_factory=WeblinkConfig)
    inputs: InputPaths = field(default_factory=InputPaths)

    def __post_init__(self) -> None:
        self.work_dir = Path(self.work_dir)
        if self.codec not in CODECS:
            raise ConfigurationError(f"unknown codec {self.codec!r}, expected one of {CODECS}")
        if self.group_cap < 1:
            raise ConfigurationError(f"group_cap must be >= 1, got {self.group_cap}")

    def apply_env(self) -> "PipelineConfig":
        """
        Override settings from REFGRAPH_* environment variables.

        Reads:
        - REFGRAPH_TMPDIR: spill directory
        - REFGRAPH_WORKERS: task and sort parallelism
        - REFGRAPH_CODEC: compression codec
        - REFGRAPH_MEMORY: sort memory budget in MiB
        - REFGRAPH_WORKDIR: artifact directory

        Returns:
            self, for chaining
        """
        if tmp := os.getenv("REFGRAPH_TMPDIR"):
            self.sort.tmp_dir = Path(tmp)
        if workers := os.getenv("REFGRAPH_WORKERS"):
            self.workers = int(workers)
            self.sort.parallelism = int(workers)
        if memory := os.getenv("REFGRAPH_MEMORY"):
            self.sort.memory_budget = int(memory) * MIB
        if codec := os.getenv("REFGRAPH_CODEC"):
            if codec not in CODECS:
                raise ConfigurationError(f"unknown codec {codec!r} in REFGRAPH_CODEC")
            self.codec = codec
        if work_dir := os.getenv("REFGRAPH_WORKDIR"):
            self.work_dir = Path(work_dir)
        return self

    @classmethod
    def from_env(cls) -> "PipelineConfig":
        """Create config from defaults plus environment overrides."""
        return cls().apply_env()

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        """
        Load config from YAML file.

        Nested sections (sort, verify, weblinks, inputs) map onto their
        dataclasses; sort.memory_budget is given in MiB.

        Args:
            path: Path to YAML configuration file

        Returns:
            PipelineConfig with values from file

        Raises:
            FileNotFoundError: If config file doesn't exist
            yaml.YAMLError: If file is not valid YAML
            ConfigurationError: If the file has unknown keys
        """
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"config file must hold a mapping: {path}")
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        """Build a config from a parsed mapping, rejecting unknown keys."""
        data = dict(data)
        sections: dict[str, Any] = {}

        sort_data = _section(data.pop("sort", None), SortSpec, "sort")
        if "memory_budget" in sort_data:
            sort_data["memory_budget"] = int(sort_data["memory_budget"]) * MIB
        if sort_data.get("tmp_dir"):
            sort_data["tmp_dir"] = Path(sort_data["tmp_dir"])
        sections["sort"] = SortSpec(**sort_data)

        verify_data = _section(data.pop("verify", None), VerifyConfig, "verify")
        if "slug_stoplist" in verify_data:
            verify_data["slug_stoplist"] = frozenset(verify_data["slug_stoplist"])
        sections["verify"] = VerifyConfig(**verify_data)

        sections["weblinks"] = WeblinkConfig(
            **_section(data.pop("weblinks", None), WeblinkConfig, "weblinks")
        )
        sections["inputs"] = InputPaths(**_section(data.pop("inputs", None), InputPaths, "inputs"))

        top = _section(data, cls, "top level")
        return cls(**top, **sections)


def _section(data: Any, target: type, name: str) -> dict[str, Any]:
    """Validate one mapping section against a dataclass's field names."""
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config section {name} must be a mapping")
    known = {f.name for f in fields(target)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown keys in {name}: {', '.join(unknown)}")
    return dict(data)


__all__ = [
    "CODECS",
    "MIB",
    "MIN_MEMORY_BUDGET",
    "InputPaths",
    "PipelineConfig",
    "SortSpec",
    "VerifyConfig",
    "WeblinkConfig",
]
