"""Run configuration, loadable from a TOML file."""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

SEVERITY_LEVELS = ("none", "minor")


@dataclass
class RunConfig:
    max_test_retries: int = 2
    auto_apply_max_severity: str = "minor"
    token_budget_per_agent: int = 16000
    max_output_tokens: int = 4096
    test_command: str | None = None
    test_timeout: float = 300.0
    k_retrieval: int = 5
    k_knowledge: int = 3
    agents_dir: str = "agents"
    agent_extension: str = ".agent"
    memory_path: str = "PROJECT.md"
    corpus_dir: str | None = None
    knowledge_use_provider: bool = False
    planner_role: str = "planner"
    reviewer_role: str = "code-reviewer"
    skip_review_if_missing: bool = True
    action_cap: int = 25
    exclude: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.max_test_retries < 0:
            raise ValueError("max_test_retries must be non-negative")
        if self.auto_apply_max_severity not in SEVERITY_LEVELS:
            raise ValueError(f"auto_apply_max_severity must be one of {SEVERITY_LEVELS}")
        for name in ("token_budget_per_agent", "max_output_tokens", "k_retrieval",
                     "k_knowledge", "action_cap", "test_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown run-config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def replace(self, **changes: Any) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def fingerprint(self) -> str:
        return repr(sorted(dataclasses.asdict(self).items()))
