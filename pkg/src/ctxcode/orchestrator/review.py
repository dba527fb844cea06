"""Code review gate: ask the reviewer agent about the diff and apply minor fixes."""

from __future__ import annotations

import enum
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

from ..errors import CtxError, ReviewerUnavailable, ReviewValidationFailed
from ..provider import Provider, ProviderRequest
from ..registry import Registry
from ..tools import Sandbox
from .diffs import ChangeSet
from .planning import last_json

ORCHESTRATOR_AGENT = "orchestrator"

REVIEW_INSTRUCTIONS = """Review the unified diff below against your checklist. Reply with a single
JSON object:
{"suggestions": [{"severity": "minor" | "major" | "blocking",
                  "path": str, "anchor": text near the issue,
                  "suggestion": str,
                  "proposed_edit": {"find": str, "replace": str} (optional)}]}
Reply with an empty list when the change is ready to merge."""


class Severity(str, enum.Enum):
    MINOR = "minor"
    MAJOR = "major"
    BLOCKING = "blocking"


_RANK = {"none": 0, Severity.MINOR: 1, Severity.MAJOR: 2, Severity.BLOCKING: 3}


@dataclass(frozen=True)
class ProposedEdit:
    find: str
    replace: str


@dataclass(frozen=True)
class ReviewSuggestion:
    severity: Severity
    path: str
    anchor: str
    suggestion: str
    proposed_edit: ProposedEdit | None = None

    def auto_applicable(self, max_severity: str) -> bool:
        """Only edits at or below ``max_severity`` with a concrete edit; never blocking ones."""
        if self.proposed_edit is None or self.severity is Severity.BLOCKING:
            return False
        return _RANK[self.severity] <= _RANK.get(max_severity, 0)

    @classmethod
    def from_dict(cls, raw: Any) -> "ReviewSuggestion":
        if not isinstance(raw, dict):
            raise ReviewValidationFailed(f"suggestion must be an object, got {raw!r}")
        try:
            severity = Severity(raw["severity"])
        except (KeyError, ValueError):
            raise ReviewValidationFailed(f"bad or missing severity in {raw!r}") from None
        missing = [k for k in ("path", "suggestion") if not isinstance(raw.get(k), str) or not raw[k]]
        if missing:
            raise ReviewValidationFailed(f"suggestion missing fields: {', '.join(missing)}")
        edit = raw.get("proposed_edit")
        proposed = None
        if edit is not None:
            if not isinstance(edit, dict) or not isinstance(edit.get("find"), str) \
                    or not edit["find"] or not isinstance(edit.get("replace"), str):
                raise ReviewValidationFailed("proposed_edit needs non-empty find and a replace string")
            proposed = ProposedEdit(edit["find"], edit["replace"])
        anchor = raw.get("anchor", "")
        return cls(severity, raw["path"], str(anchor), raw["suggestion"], proposed)


def parse_suggestions(data: Any) -> list[ReviewSuggestion]:
    if not isinstance(data, dict) or not isinstance(data.get("suggestions"), list):
        raise ReviewValidationFailed("review reply must be an object with a 'suggestions' list")
    return [ReviewSuggestion.from_dict(s) for s in data["suggestions"]]


def review_changes(
    changes: ChangeSet,
    provider: Provider,
    registry: Registry,
    reviewer_role: str = "code-reviewer",
    max_output_tokens: int = 4096,
) -> list[ReviewSuggestion]:
    """Reviewer suggestions for ``changes``; no provider call for an empty diff."""
    if reviewer_role not in registry:
        raise ReviewerUnavailable(f"no {reviewer_role!r} profile in the registry")
    if not changes.unified_diff:
        return []
    profile = registry.get(reviewer_role)
    prompt = (
        f"{profile.system_prompt}\n\n{REVIEW_INSTRUCTIONS}\n\n"
        f"Files touched: {', '.join(changes.files_touched)}\n\n{changes.unified_diff}"
    )
    resp = provider.complete(ProviderRequest(reviewer_role, prompt, max_output_tokens))
    try:
        data = last_json(resp)
    except ValueError as err:
        raise ReviewValidationFailed(f"reviewer reply is not JSON: {err}") from None
    return parse_suggestions(data)


def apply_suggestions(
    suggestions: Sequence[ReviewSuggestion],
    sandbox: Sandbox,
    max_severity: str = "minor",
    agent: str = ORCHESTRATOR_AGENT,
    log: Callable[[str, str, str, int, int, str], None] | None = None,
) -> tuple[list[ReviewSuggestion], list[tuple[ReviewSuggestion, str]]]:
    """Apply every auto-applicable suggestion through the Edit tool.

    Returns (applied, skipped-with-reason). A failed edit is skipped, not fatal.
    """
    applied: list[ReviewSuggestion] = []
    skipped: list[tuple[ReviewSuggestion, str]] = []
    for s in suggestions:
        if not s.auto_applicable(max_severity):
            skipped.append((s, f"{s.severity.value} suggestion left for a human"))
            continue
        try:
            key = sandbox.rel(s.path)
            sandbox.locks.acquire(key, agent)
            try:
                result = sandbox.edit(s.path, s.proposed_edit.find, s.proposed_edit.replace, agent)
                if log is not None:
                    log("tool_call", agent, f"Edit {key}\n{result.content}", 0, 0, f"Edit path={key} ok=True")
            finally:
                sandbox.locks.release(key, agent)
        except CtxError as err:
            skipped.append((s, f"{type(err).__name__}: {err}"))
            continue
        applied.append(s)
    return applied, skipped
