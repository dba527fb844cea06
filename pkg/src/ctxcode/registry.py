"""Sub-agent profiles: parsing, serialization and the directory-backed registry.

A profile file is a block of ``key: value`` header lines, a blank line, and the
raw system prompt::

    name: backend-architect
    description: Design RESTful APIs, microservice boundaries,
    and database schemas
    model: sonnet
    tools: Read, Write, Edit, Bash

    You are a senior backend architect ...

Only the description may wrap: a line without a ``key:`` prefix right after it
continues its value.
"""

from __future__ import annotations

import enum
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .errors import (
    AgentFileError,
    DuplicateAgentName,
    EmptyPrompt,
    InvalidProfile,
    MissingField,
    ProfileNotFound,
    UnknownHeaderKey,
    UnknownTool,
)
from .tools import TOOL_NAMES

HEADER_KEYS = ("name", "description", "model", "tools")
REQUIRED_KEYS = ("name", "description", "tools")
DEFAULT_EXTENSION = ".agent"

_NAME_RE = re.compile(r"[a-z0-9-]+")
_HEADER_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_-]*)\s*:(.*)")


class ModelTier(str, enum.Enum):
    FAST = "fast"
    BALANCED = "balanced"
    POWERFUL = "powerful"


DEFAULT_MODEL_ALIASES: Mapping[str, ModelTier] = MappingProxyType(
    {"haiku": ModelTier.FAST, "sonnet": ModelTier.BALANCED, "opus": ModelTier.POWERFUL}
)


@dataclass(frozen=True)
class AgentProfile:
    name: str
    description: str
    model_tier: ModelTier
    tools: tuple[str, ...]
    system_prompt: str

    def allows(self, tool: str) -> bool:
        return tool in self.tools


def _resolve_tier(value: str, aliases: Mapping[str, ModelTier], line: int) -> ModelTier:
    key = value.strip().lower()
    if key in aliases:
        return ModelTier(aliases[key])
    try:
        return ModelTier(key)
    except ValueError:
        raise InvalidProfile(
            f"unknown model {value.strip()!r}; expected one of "
            f"{sorted(set(aliases) | {t.value for t in ModelTier})}",
            line,
        ) from None


def parse_agent_file(
    text: str,
    toolset: Iterable[str] = TOOL_NAMES,
    aliases: Mapping[str, ModelTier] = DEFAULT_MODEL_ALIASES,
    default_tier: ModelTier = ModelTier.BALANCED,
) -> AgentProfile:
    """Parse one profile file.

    Raises MissingField, UnknownHeaderKey, EmptyPrompt, UnknownTool or
    InvalidProfile; each carries the 1-based line number it refers to.
    """
    if not text:
        raise EmptyPrompt("profile file is empty", 1)
    lines = text.replace("\r\n", "\n").split("\n")

    i = 0
    while i < len(lines) and not lines[i].strip():
        i += 1

    values: dict[str, list[str]] = {}
    key_lines: dict[str, int] = {}
    current: str | None = None
    while i < len(lines) and lines[i].strip():
        line_no = i + 1
        raw = lines[i]
        m = _HEADER_RE.fullmatch(raw) if not raw[:1].isspace() else None
        if m:
            key = m.group(1)
            if key not in HEADER_KEYS:
                raise UnknownHeaderKey(f"unknown header key {key!r}", line_no)
            if key in values:
                raise InvalidProfile(f"header key {key!r} repeated", line_no)
            values[key] = [m.group(2).strip()]
            key_lines[key] = line_no
            current = key
        elif current is None:
            raise UnknownHeaderKey(f"expected 'key: value', got {raw.strip()!r}", line_no)
        elif current == "description":
            values[current].append(raw.strip())
        else:
            raise EmptyPrompt(
                "system prompt must be separated from the headers by a blank line", line_no
            )
        i += 1
    header_end = i + 1  # line number of the separating blank line

    for key in REQUIRED_KEYS:
        if key not in values:
            raise MissingField(f"missing header field {key!r}", header_end)

    if i >= len(lines):
        raise EmptyPrompt("no blank line separating headers from the system prompt", header_end)
    prompt = "\n".join(lines[i + 1 :])
    if not prompt.strip():
        raise EmptyPrompt("system prompt is empty", header_end + 1)

    name = " ".join(values["name"]).strip()
    if not _NAME_RE.fullmatch(name):
        raise InvalidProfile(f"agent name {name!r} must match [a-z0-9-]+", key_lines["name"])

    known = set(toolset)
    tools: list[str] = []
    for item in ",".join(values["tools"]).split(","):
        tool = item.strip()
        if not tool:
            continue
        if tool not in known:
            raise UnknownTool(f"unknown tool {tool!r}", key_lines["tools"])
        if tool not in tools:
            tools.append(tool)

    if "model" in values:
        tier = _resolve_tier(" ".join(values["model"]), aliases, key_lines["model"])
    else:
        tier = default_tier

    return AgentProfile(
        name=name,
        description=" ".join(v for v in values["description"] if v),
        model_tier=tier,
        tools=tuple(tools),
        system_prompt=prompt,
    )


def serialize_profile(
    profile: AgentProfile, aliases: Mapping[str, ModelTier] = DEFAULT_MODEL_ALIASES
) -> str:
    model = next((a for a, t in aliases.items() if t == profile.model_tier), profile.model_tier.value)
    header = [
        f"name: {profile.name}",
        f"description: {profile.description}",
        f"model: {model}",
        f"tools: {', '.join(profile.tools)}",
    ]
    return "\n".join(header) + "\n\n" + profile.system_prompt


@dataclass(frozen=True)
class Registry:
    """Immutable name -> profile mapping; iterates in lexicographic name order."""

    profiles: Mapping[str, AgentProfile]
    source_dir: Path | None = None
    _paths: Mapping[str, Path] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        ordered = {k: self.profiles[k] for k in sorted(self.profiles)}
        object.__setattr__(self, "profiles", MappingProxyType(ordered))

    def __len__(self) -> int:
        return len(self.profiles)

    def __iter__(self) -> Iterator[AgentProfile]:
        return iter(self.profiles.values())

    def __contains__(self, name: object) -> bool:
        return name in self.profiles

    @property
    def names(self) -> list[str]:
        return list(self.profiles)

    def get(self, name: str) -> AgentProfile:
        try:
            return self.profiles[name]
        except KeyError:
            raise ProfileNotFound(name, self.names) from None

    def path_of(self, name: str) -> Path | None:
        return self._paths.get(name)


def get_profile(reg: Registry, name: str) -> AgentProfile:
    return reg.get(name)


def load_registry(
    directory: str | Path,
    toolset: Iterable[str] = TOOL_NAMES,
    extension: str = DEFAULT_EXTENSION,
    aliases: Mapping[str, ModelTier] = DEFAULT_MODEL_ALIASES,
) -> Registry:
    """Parse every ``*<extension>`` regular file in ``directory``.

    Parse errors are re-raised annotated with the offending file path.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"agent directory {directory} does not exist")
    toolset = tuple(toolset)
    profiles: dict[str, AgentProfile] = {}
    paths: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if not path.is_file() or path.suffix != extension:
            continue
        try:
            profile = parse_agent_file(path.read_text(encoding="utf-8"), toolset, aliases)
        except AgentFileError as err:
            raise err.with_path(str(path)) from err
        if profile.name in profiles:
            raise DuplicateAgentName(profile.name, str(paths[profile.name]), str(path))
        profiles[profile.name] = profile
        paths[profile.name] = path
    return Registry(profiles, directory, paths)
