"""Delegating one plan step to its agent and running the agent's action loop."""

from __future__ import annotations

import json
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

from ..context import ContextEntry, ContextStack, assemble_prompt
from ..errors import ActionCapExceeded, CtxError
from ..provider import Done, Message, Provider, ProviderRequest, ToolInvocation
from ..registry import AgentProfile, Registry
from ..retrieval.search import ScoredSnippet
from ..tools import Sandbox, ToolResult
from .planning import Plan, PlanStep

WRITE_TOOLS = ("Write", "Edit")
DEFAULT_ACTION_CAP = 25

STEP_INSTRUCTIONS = """Instructions:
- Work only on this step; other steps are handled by other agents.
- Ground every change in the repository context above; read files before editing them.
- Use the Edit tool for small changes and Write for new files.
- When the step is finished, reply with a done action (status complete), or
  status blocked with a note if it cannot be done."""


@dataclass
class StepOutcome:
    step_id: str
    agent_name: str
    status: str  # "complete" | "blocked"
    edits: list[str] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)
    actions: int = 0
    note: str = ""


# Called as log(kind, agent, payload, input_tokens, output_tokens, detail).
EventLog = Callable[[str, str, str, int, int, str], None]


def _no_log(*_args) -> None:
    return None


def step_excerpt(plan: Plan, step: PlanStep, index: int, total: int) -> str:
    lines = [f"You are executing plan step {index} of {total} (id {step.id}): {step.description}"]
    if step.files:
        lines.append(f"Files: {', '.join(step.files)}")
    if step.depends_on:
        done = [plan.step(d) for d in step.depends_on]
        lines.append("Completed before this step: " + "; ".join(d.description for d in done))
    return "\n".join(lines)


def step_stack(
    base: ContextStack,
    excerpt: str,
    snippets: Sequence[ScoredSnippet],
    history: Sequence[ContextEntry] = (),
) -> ContextStack:
    """The base stack (spec, knowledge, memory) plus the step-specific layers."""
    stack = base.copy()
    stack.add("L1", ContextEntry("plan-step", excerpt))
    stack.add("L1", ContextEntry("instructions", STEP_INSTRUCTIONS))
    for rank, snip in enumerate(snippets):
        stack.add("L4", ContextEntry(f"snippet:{snip.chunk.repo_rel_path}", snip.render(),
                                     priority=len(snippets) - rank))
    for entry in history:
        stack.add("L5", entry)
    return stack


def _describe_call(inv: ToolInvocation) -> str:
    shown = {k: v for k, v in sorted(inv.args.items()) if k != "content"}
    if "content" in inv.args:
        shown["content"] = f"<{len(str(inv.args['content']))} chars>"
    return f"{inv.tool_name} {json.dumps(shown, sort_keys=True, ensure_ascii=False)}"


class StepExecution:
    """Provider -> tools -> provider loop for one agent on one step.

    Locks on written paths are taken on first write and all released when the
    loop ends, however it ends.
    """

    def __init__(
        self,
        profile: AgentProfile,
        stack: ContextStack,
        provider: Provider,
        sandbox: Sandbox,
        step_id: str = "",
        budget: int = 16000,
        max_output_tokens: int = 4096,
        action_cap: int = DEFAULT_ACTION_CAP,
        log: EventLog = _no_log,
    ):
        self.profile = profile
        self.stack = stack.copy()
        self.provider = provider
        self.sandbox = sandbox
        self.budget = budget
        self.max_output_tokens = max_output_tokens
        self.action_cap = action_cap
        self.log = log
        self.outcome = StepOutcome(step_id, profile.name, "complete")
        self.finished = False

    def prompt(self) -> str:
        return assemble_prompt(self.stack, self.profile.system_prompt, self.budget)

    def _tool(self, inv: ToolInvocation) -> tuple[ToolResult, str | None]:
        agent = self.profile.name
        path = inv.args.get("path")
        key = None
        if inv.tool_name in WRITE_TOOLS and self.profile.allows(inv.tool_name) and isinstance(path, str):
            try:
                key = self.sandbox.rel(path)
            except CtxError:
                key = None  # the tool call itself reports the bad path
            if key is not None:
                self.sandbox.locks.acquire(key, agent)
        result = self.sandbox.invoke(self.profile, inv.tool_name, inv.args)
        if result.ok and key is not None and key not in self.outcome.edits:
            self.outcome.edits.append(key)
        return result, key

    def advance(self) -> bool:
        """One provider round trip; True once the agent has signalled done."""
        req = ProviderRequest(self.profile.name, self.prompt(), self.max_output_tokens)
        resp = self.provider.complete(req)
        for action in resp.actions:
            self.outcome.actions += 1
            if self.outcome.actions > self.action_cap:
                raise ActionCapExceeded(
                    f"{self.profile.name} exceeded {self.action_cap} actions on step {self.outcome.step_id}"
                )
            if isinstance(action, ToolInvocation):
                call = _describe_call(action)
                result, key = self._tool(action)
                path = key if key is not None else action.args.get("path", "")
                self.log("tool_call", self.profile.name, f"{call}\n{result.content}", 0, 0,
                         f"{action.tool_name} path={path} ok={result.ok}")
                status = "ok" if result.ok else "error"
                self.stack.add("L5", ContextEntry(f"tool-result:{status}", f"{call}\n{result.content}"))
            elif isinstance(action, Message):
                self.outcome.messages.append(action.content)
                self.stack.add("L5", ContextEntry(f"message:{self.profile.name}", action.content))
            elif isinstance(action, Done):
                self.outcome.status = action.status
                self.outcome.note = action.note
                self.finished = True
                return True
        return False

    def run(self) -> StepOutcome:
        try:
            while not self.advance():
                pass
        finally:
            self.sandbox.locks.release_all(self.profile.name)
        return self.outcome


def delegate_step(
    step: PlanStep,
    stack: ContextStack,
    registry: Registry,
    provider: Provider,
    sandbox: Sandbox,
    budget: int = 16000,
    max_output_tokens: int = 4096,
    action_cap: int = DEFAULT_ACTION_CAP,
    log: EventLog = _no_log,
) -> StepOutcome:
    """Run ``step``'s agent on ``stack`` until it is done or the action cap is hit."""
    profile = registry.get(step.assigned_role)
    execution = StepExecution(profile, stack, provider, sandbox, step.id, budget,
                              max_output_tokens, action_cap, log)
    return execution.run()
