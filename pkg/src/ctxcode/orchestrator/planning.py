"""Intent translation and plan construction.

Both phases ask a provider for a JSON document in the last Message action of
its response and validate it before anything else happens.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

from ..context import ContextEntry, ContextStack, TaskSpec, assemble_prompt, new_stack
from ..errors import PlanValidationFailed, SpecValidationFailed
from ..knowledge import KnowledgeSummary
from ..provider import Provider, ProviderRequest, ProviderResponse
from ..registry import Registry
from ..retrieval.search import ScoredSnippet

INTENT_AGENT = "intent-translator"

INTENT_PROMPT = """You are an Intent Translator. Rewrite the developer request below as a
structured task specification before any code is written. Reply with a single
JSON object:
{"title": str, "clarified_goal": str,
 "subtasks": [{"id": int, "description": str, "suggested_role": str,
               "target_hints": [path], "depends_on": [earlier id]}],
 "acceptance_checks": [str], "search_terms": [str]}"""

SCHEMA_REMINDER = (
    "Schema reminder: the previous reply was not a valid task specification "
    "({problem}). Reply with JSON only, with fields title, clarified_goal and a "
    "non-empty subtasks list whose ids are unique and whose depends_on only name "
    "earlier ids."
)

PLANNER_PROMPT = """You are the planner. Produce a concrete implementation plan for the task,
mapping each step to the agent best suited to it and to the files it touches.
Reply with a single JSON object:
{"steps": [{"id": str, "description": str, "role": agent name,
            "depends_on": [step id], "files": [path]}]}"""


class StepStatus(str, enum.Enum):
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    DONE = "done"
    FAILED = "failed"


@dataclass
class PlanStep:
    id: str
    description: str
    assigned_role: str
    depends_on: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    status: StepStatus = StepStatus.PENDING


@dataclass
class Plan:
    steps: list[PlanStep]

    def __len__(self) -> int:
        return len(self.steps)

    def step(self, step_id: str) -> PlanStep:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)

    def ready(self, step: PlanStep) -> bool:
        return all(self.step(d).status is StepStatus.DONE for d in step.depends_on)

    def execution_order(self) -> list[PlanStep]:
        """Topological order, stable with respect to plan order."""
        done: set[str] = set()
        order: list[PlanStep] = []
        remaining = list(self.steps)
        while remaining:
            for s in remaining:
                if all(d in done for d in s.depends_on):
                    order.append(s)
                    done.add(s.id)
                    remaining.remove(s)
                    break
            else:
                raise PlanValidationFailed("plan dependencies contain a cycle")
        return order

    def render(self) -> str:
        lines = []
        for n, s in enumerate(self.steps, 1):
            line = f"{n}. [{s.assigned_role}] {s.description}"
            if s.files:
                line += f" (files: {', '.join(s.files)})"
            if s.depends_on:
                line += f" (after: {', '.join(s.depends_on)})"
            lines.append(line)
        return "\n".join(lines)

    def summary(self) -> str:
        return "\n".join(f"- {s.id} [{s.assigned_role}] {s.status.value}: {s.description}"
                         for s in self.steps)


def last_json(resp: ProviderResponse) -> Any:
    """Decode the last Message of a response; ValueError when absent or invalid."""
    text = resp.last_message()
    if text is None:
        raise ValueError("response carries no message")
    text = text.strip()
    if text.startswith("```"):
        text = text.strip("`")
        text = text[text.index("\n") + 1 :] if "\n" in text else text
    return json.loads(text)


# -- intent translation ------------------------------------------------------------------


def translate_intent(
    user_request: str,
    provider: Provider,
    registry: Registry | None = None,
    max_output_tokens: int = 4096,
) -> TaskSpec:
    """Structured TaskSpec for a free-form request, retried once on a bad reply."""
    if not user_request or not user_request.strip():
        raise ValueError("the request must be non-empty")
    system = INTENT_PROMPT
    if registry is not None and INTENT_AGENT in registry:
        system = registry.get(INTENT_AGENT).system_prompt
    prompt = f"{system}\n\nRequest:\n{user_request.strip()}\n"
    problem = ""
    for attempt in range(2):
        text = prompt if attempt == 0 else SCHEMA_REMINDER.format(problem=problem) + "\n\n" + prompt
        resp = provider.complete(ProviderRequest(INTENT_AGENT, text, max_output_tokens))
        try:
            return TaskSpec.from_dict(last_json(resp))
        except ValueError as err:
            problem = f"invalid JSON: {err}"
        except SpecValidationFailed as err:
            problem = str(err)
    raise SpecValidationFailed(problem)


# -- planning -------------------------------------------------------------------------


def _roles_listing(registry: Registry, exclude: Sequence[str]) -> str:
    lines = ["Available roles:"]
    for profile in registry:
        if profile.name not in exclude:
            lines.append(f"- {profile.name}: {profile.description}")
    return "\n".join(lines)


def parse_plan(data: Any) -> Plan:
    """Structural validation: ids, dependencies and acyclicity (roles are checked later)."""
    if not isinstance(data, dict) or not isinstance(data.get("steps"), list):
        raise PlanValidationFailed("plan must be an object with a 'steps' list")
    if not data["steps"]:
        raise PlanValidationFailed("plan has no steps")
    steps: list[PlanStep] = []
    for n, raw in enumerate(data["steps"], 1):
        if not isinstance(raw, dict):
            raise PlanValidationFailed(f"step {n} is not an object")
        missing = [k for k in ("description", "role") if not raw.get(k)]
        if missing:
            raise PlanValidationFailed(f"step {n} missing fields: {', '.join(missing)}")
        deps = raw.get("depends_on", [])
        files = raw.get("files", [])
        if not isinstance(deps, list) or not isinstance(files, list):
            raise PlanValidationFailed(f"step {n}: depends_on and files must be lists")
        steps.append(PlanStep(
            id=str(raw.get("id", n)),
            description=str(raw["description"]),
            assigned_role=str(raw["role"]),
            depends_on=[str(d) for d in deps],
            files=[str(f) for f in files],
        ))
    ids = [s.id for s in steps]
    if len(set(ids)) != len(ids):
        raise PlanValidationFailed("plan step ids are not unique")
    for s in steps:
        unknown = [d for d in s.depends_on if d not in ids]
        if unknown:
            raise PlanValidationFailed(f"step {s.id} depends on unknown steps {unknown}")
        if s.id in s.depends_on:
            raise PlanValidationFailed(f"step {s.id} depends on itself")
    plan = Plan(steps)
    plan.execution_order()
    return plan


def planner_stack(
    spec: TaskSpec, knowledge: KnowledgeSummary | None, snippets: Sequence[ScoredSnippet]
) -> ContextStack:
    stack = new_stack(spec)
    if knowledge is not None:
        for doc_id in knowledge.toc:
            stack.add("L2", ContextEntry(f"doc:{doc_id}", knowledge.render_doc(doc_id)))
        if knowledge.qa_pairs:
            stack.add("L2", ContextEntry("qa", knowledge.render_qa()))
    for rank, snip in enumerate(snippets):
        stack.add("L4", ContextEntry(f"snippet:{snip.chunk.repo_rel_path}", snip.render(),
                                     priority=len(snippets) - rank))
    return stack


def make_plan(
    spec: TaskSpec,
    knowledge: KnowledgeSummary | None,
    snippets: Sequence[ScoredSnippet],
    provider: Provider,
    registry: Registry,
    planner_role: str = "planner",
    budget: int = 16000,
    max_output_tokens: int = 4096,
) -> Plan:
    """Role-assigned plan; one re-prompt when the planner names unknown roles."""
    if len(registry) == 0:
        raise PlanValidationFailed("the agent registry is empty")
    system = registry.get(planner_role).system_prompt if planner_role in registry else ""
    system = f"{system}\n\n{PLANNER_PROMPT}" if system else PLANNER_PROMPT
    system += "\n\n" + _roles_listing(registry, (planner_role, INTENT_AGENT))
    base = assemble_prompt(planner_stack(spec, knowledge, snippets), system, budget)
    prompt = base
    for attempt in range(2):
        resp = provider.complete(ProviderRequest(planner_role, prompt, max_output_tokens))
        try:
            data = last_json(resp)
        except ValueError as err:
            raise PlanValidationFailed(f"planner reply is not JSON: {err}") from None
        plan = parse_plan(data)
        unknown = sorted({s.assigned_role for s in plan.steps if s.assigned_role not in registry})
        if not unknown:
            return plan
        if attempt == 0:
            prompt = (
                f"Role reminder: {', '.join(unknown)} not in the registry. "
                f"Use only: {', '.join(registry.names)}.\n\n{base}"
            )
    raise PlanValidationFailed(f"plan assigns roles missing from the registry: {', '.join(unknown)}")
