"""Task specification types and layered prompt assembly.

Every agent prompt is the role prompt followed by five fixed layers:

    L1 task specification, L2 external knowledge, L3 project memory,
    L4 retrieved code context, L5 execution artifacts.

When the prompt does not fit the token budget, entries are dropped from L5,
then L4, then L2, then L3, lowest priority first (latest insertion first on
ties). L1 and the role prompt are never dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import BudgetTooSmall, SpecValidationFailed

LAYER_IDS = ("L1", "L2", "L3", "L4", "L5")
LAYER_TITLES = {
    "L1": "Task Specification",
    "L2": "External Knowledge",
    "L3": "Project Memory",
    "L4": "Retrieved Code Context",
    "L5": "Execution Artifacts",
}
DROP_ORDER = ("L5", "L4", "L2", "L3")
MEMORY_TAG = "project-memory"
DEFAULT_MEMORY_PATH = "PROJECT.md"


def estimate_tokens(text: str) -> int:
    """ceil(utf-8 byte length / 4)."""
    return math.ceil(len(text.encode("utf-8", "surrogateescape")) / 4)


def banner(layer_id: str) -> str:
    return f"== {layer_id}: {LAYER_TITLES[layer_id]} =="


# -- task specification ---------------------------------------------------------


@dataclass
class SubtaskSpec:
    id: int
    description: str
    suggested_role: str | None = None
    target_hints: list[str] = field(default_factory=list)
    depends_on: list[int] = field(default_factory=list)


@dataclass
class TaskSpec:
    title: str
    clarified_goal: str
    subtasks: list[SubtaskSpec]
    acceptance_checks: list[str] = field(default_factory=list)
    search_terms: list[str] = field(default_factory=list)

    def validate(self) -> None:
        """Raise SpecValidationFailed listing every violated invariant."""
        problems = []
        if not self.title.strip():
            problems.append("title is empty")
        if not self.subtasks:
            problems.append("subtasks: at least one subtask required")
        seen: set[int] = set()
        for sub in self.subtasks:
            if sub.id in seen:
                problems.append(f"subtasks: duplicate id {sub.id}")
            if not sub.description.strip():
                problems.append(f"subtasks[{sub.id}].description is empty")
            for dep in sub.depends_on:
                if dep not in seen:
                    problems.append(f"subtasks[{sub.id}].depends_on: {dep} is not an earlier subtask")
            seen.add(sub.id)
        if problems:
            raise SpecValidationFailed("; ".join(problems))

    def render(self) -> str:
        out = [f"Task: {self.title}", f"Goal: {self.clarified_goal}", "Steps:"]
        for n, sub in enumerate(self.subtasks, 1):
            line = f"{n}. {sub.description}"
            if sub.suggested_role:
                line += f" [role: {sub.suggested_role}]"
            if sub.target_hints:
                line += f" (targets: {', '.join(sub.target_hints)})"
            if sub.depends_on:
                line += f" (after: {', '.join(map(str, sub.depends_on))})"
            out.append(line)
        if self.acceptance_checks:
            out.append("Acceptance checks:")
            out.extend(f"- {c}" for c in self.acceptance_checks)
        if self.search_terms:
            out.append(f"Search terms: {', '.join(self.search_terms)}")
        return "\n".join(out)

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "clarified_goal": self.clarified_goal,
            "subtasks": [
                {
                    "id": s.id,
                    "description": s.description,
                    "suggested_role": s.suggested_role,
                    "target_hints": list(s.target_hints),
                    "depends_on": list(s.depends_on),
                }
                for s in self.subtasks
            ],
            "acceptance_checks": list(self.acceptance_checks),
            "search_terms": list(self.search_terms),
        }

    @classmethod
    def from_dict(cls, data: Any) -> "TaskSpec":
        """Build and validate a spec from decoded JSON."""
        if not isinstance(data, dict):
            raise SpecValidationFailed("task spec must be an object")
        missing = [k for k in ("title", "clarified_goal", "subtasks") if k not in data]
        if missing:
            raise SpecValidationFailed(f"missing fields: {', '.join(missing)}")
        try:
            subtasks = []
            for raw in data["subtasks"]:
                absent = [k for k in ("id", "description") if k not in raw]
                if absent:
                    raise SpecValidationFailed(f"subtask missing fields: {', '.join(absent)}")
                subtasks.append(
                    SubtaskSpec(
                        id=int(raw["id"]),
                        description=str(raw["description"]),
                        suggested_role=raw.get("suggested_role") or None,
                        target_hints=[str(h) for h in raw.get("target_hints", [])],
                        depends_on=[int(d) for d in raw.get("depends_on", [])],
                    )
                )
            spec = cls(
                title=str(data["title"]),
                clarified_goal=str(data["clarified_goal"]),
                subtasks=subtasks,
                acceptance_checks=[str(c) for c in data.get("acceptance_checks", [])],
                search_terms=[str(t) for t in data.get("search_terms", [])],
            )
        except (TypeError, ValueError, AttributeError) as err:
            raise SpecValidationFailed(f"malformed task spec: {err}") from None
        spec.validate()
        return spec


@dataclass
class ProjectMemory:
    path: str = DEFAULT_MEMORY_PATH
    content: str = ""

    @classmethod
    def load(cls, root: str | Path, path: str = DEFAULT_MEMORY_PATH) -> "ProjectMemory":
        target = Path(root) / path
        if not target.is_file():
            return cls(path, "")
        return cls(path, target.read_bytes().decode("utf-8"))


# -- layers -------------------------------------------------------------------------


@dataclass(frozen=True)
class ContextEntry:
    source_tag: str
    content: str
    priority: int = 0
    token_estimate: int = field(init=False)

    def __post_init__(self) -> None:
        if self.priority < 0:
            raise ValueError("priority must be non-negative")
        object.__setattr__(self, "token_estimate", estimate_tokens(self.content))

    def render(self) -> str:
        return f"[{self.source_tag}]\n{self.content}\n"


@dataclass
class ContextStack:
    layers: dict[str, list[ContextEntry]] = field(
        default_factory=lambda: {lid: [] for lid in LAYER_IDS}
    )

    def __post_init__(self) -> None:
        if tuple(self.layers) != LAYER_IDS:
            raise ValueError(f"a context stack has exactly the layers {LAYER_IDS}")

    def add(self, layer_id: str, entry: ContextEntry) -> "ContextStack":
        if layer_id not in self.layers:
            raise ValueError(f"unknown layer {layer_id!r}; expected one of {LAYER_IDS}")
        self.layers[layer_id].append(entry)
        return self

    def __getitem__(self, layer_id: str) -> list[ContextEntry]:
        return self.layers[layer_id]

    def copy(self) -> "ContextStack":
        return ContextStack({lid: list(entries) for lid, entries in self.layers.items()})


def new_stack(spec: TaskSpec, memory: ProjectMemory | None = None) -> ContextStack:
    stack = ContextStack()
    stack.add("L1", ContextEntry("task-spec", spec.render()))
    if memory is not None and memory.content:
        stack.add("L3", ContextEntry(MEMORY_TAG, memory.content))
    return stack


def add_entry(stack: ContextStack, layer_id: str, entry: ContextEntry) -> ContextStack:
    return stack.add(layer_id, entry)


def _render(role_prompt: str, stack: ContextStack, dropped: set[tuple[str, int]]) -> str:
    parts = [role_prompt.rstrip("\n"), ""]
    for lid in LAYER_IDS:
        parts.append(banner(lid))
        elided = 0
        for idx, entry in enumerate(stack.layers[lid]):
            if (lid, idx) in dropped:
                elided += 1
            else:
                parts.append(entry.render())
        if elided:
            parts.append(f"[{elided} entries elided]")
    return "\n".join(parts) + "\n"


def drop_sequence(stack: ContextStack) -> list[tuple[str, int]]:
    """Order in which entries are removed when the prompt is over budget."""
    order = []
    for lid in DROP_ORDER:
        entries = stack.layers[lid]
        ranked = sorted(range(len(entries)), key=lambda i: (entries[i].priority, -i))
        order.extend((lid, i) for i in ranked)
    return order


def _select(stack: ContextStack, role_prompt: str, budget: int) -> set[tuple[str, int]]:
    order = drop_sequence(stack)
    dropped: set[tuple[str, int]] = set()
    if estimate_tokens(_render(role_prompt, stack, dropped)) <= budget:
        return dropped
    floor = estimate_tokens(_render(role_prompt, stack, set(order)))
    if floor > budget:
        raise BudgetTooSmall(budget, floor)
    for key in order:
        dropped.add(key)
        if estimate_tokens(_render(role_prompt, stack, dropped)) <= budget:
            break
    return dropped


def assemble_prompt(stack: ContextStack, role_prompt: str, budget: int) -> str:
    """Render role prompt plus all five layers within ``budget`` estimated tokens.

    Dropped entries leave one ``[N entries elided]`` marker per affected layer.
    Raises BudgetTooSmall when even role prompt + L1 (with every droppable
    entry elided) exceeds the budget.
    """
    return _render(role_prompt, stack, _select(stack, role_prompt, budget))


def surviving_entries(
    stack: ContextStack, role_prompt: str, budget: int
) -> list[tuple[str, int]]:
    """(layer, index) pairs kept by assemble_prompt at this budget."""
    dropped = _select(stack, role_prompt, budget)
    return [
        (lid, i)
        for lid in LAYER_IDS
        for i in range(len(stack.layers[lid]))
        if (lid, i) not in dropped
    ]


def minimal_budget(stack: ContextStack, role_prompt: str) -> int:
    """Smallest budget for which assembly succeeds."""
    return estimate_tokens(_render(role_prompt, stack, set(drop_sequence(stack))))
