"""Model-provider contract and the deterministic scripted / recording providers.

A fixture file is JSON lines, one entry per line (blank lines and lines
starting with ``#`` are ignored)::

    {"match": {"agent": "planner", "contains": "Steps:"},
     "response": {"actions": [{"type": "message", "content": "..."}],
                  "usage": {"input_tokens": 120, "output_tokens": 40}}}

``match.agent`` is required; ``contains`` (prompt substring) and ``digest``
(sha256 of the request) are optional. Actions are ``tool`` (``tool``,
``args``), ``message`` (``content``) or ``done`` (``status``, ``note``).
Without ``usage`` the scripted provider estimates tokens from the prompt and
the serialized actions.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Union

from .context import estimate_tokens
from .errors import FixtureFormatError, NoFixtureMatch

DEFAULT_MAX_OUTPUT_TOKENS = 4096


@dataclass(frozen=True)
class ToolInvocation:
    tool_name: str
    args: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Message:
    content: str


@dataclass(frozen=True)
class Done:
    status: str = "complete"  # "complete" | "blocked"
    note: str = ""

    def __post_init__(self) -> None:
        if self.status not in ("complete", "blocked"):
            raise ValueError(f"Done.status must be complete or blocked, got {self.status!r}")


AgentAction = Union[ToolInvocation, Message, Done]


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token usage must be non-negative")


@dataclass(frozen=True)
class ProviderRequest:
    agent_name: str
    prompt: str
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("provider request prompt must be non-empty")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")

    @property
    def digest(self) -> str:
        return sha256_hex(f"{self.agent_name}\0{self.prompt}")


@dataclass(frozen=True)
class ProviderResponse:
    actions: tuple[AgentAction, ...]
    usage: Usage = Usage()

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ValueError("a provider response carries at least one action")

    def last_message(self) -> str | None:
        for action in reversed(self.actions):
            if isinstance(action, Message):
                return action.content
        return None


class Provider(Protocol):
    def complete(self, req: ProviderRequest) -> ProviderResponse: ...


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8", "surrogatepass")).hexdigest()


# -- wire encoding ------------------------------------------------------------------


def action_to_dict(action: AgentAction) -> dict[str, Any]:
    if isinstance(action, ToolInvocation):
        return {"type": "tool", "tool": action.tool_name, "args": dict(action.args)}
    if isinstance(action, Message):
        return {"type": "message", "content": action.content}
    return {"type": "done", "status": action.status, "note": action.note}


def action_from_dict(raw: Any) -> AgentAction:
    if not isinstance(raw, dict):
        raise FixtureFormatError(f"action must be an object, got {raw!r}")
    kind = raw.get("type")
    try:
        if kind == "tool":
            args = raw.get("args", {})
            if not isinstance(args, dict):
                raise FixtureFormatError("tool args must be an object")
            return ToolInvocation(str(raw["tool"]), args)
        if kind == "message":
            return Message(str(raw["content"]))
        if kind == "done":
            return Done(str(raw.get("status", "complete")), str(raw.get("note", "")))
    except (KeyError, ValueError) as err:
        raise FixtureFormatError(f"bad {kind} action: {err}") from None
    raise FixtureFormatError(f"unknown action type {kind!r}")


def response_to_dict(resp: ProviderResponse) -> dict[str, Any]:
    return {
        "actions": [action_to_dict(a) for a in resp.actions],
        "usage": {"input_tokens": resp.usage.input_tokens, "output_tokens": resp.usage.output_tokens},
    }


def response_from_dict(raw: Any) -> tuple[tuple[AgentAction, ...], Usage | None]:
    if not isinstance(raw, dict) or "actions" not in raw:
        raise FixtureFormatError("response must be an object with 'actions'")
    actions = tuple(action_from_dict(a) for a in raw["actions"])
    if not actions:
        raise FixtureFormatError("response has no actions")
    usage = None
    if "usage" in raw:
        try:
            usage = Usage(int(raw["usage"]["input_tokens"]), int(raw["usage"]["output_tokens"]))
        except (KeyError, TypeError, ValueError) as err:
            raise FixtureFormatError(f"bad usage: {err}") from None
    return actions, usage


@dataclass
class FixtureEntry:
    agent_name: str
    actions: tuple[AgentAction, ...]
    prompt_substring: str = ""
    prompt_digest: str | None = None
    usage: Usage | None = None

    def matches(self, req: ProviderRequest) -> bool:
        if req.agent_name != self.agent_name:
            return False
        if self.prompt_digest is not None and req.digest != self.prompt_digest:
            return False
        return self.prompt_substring in req.prompt

    def to_dict(self) -> dict[str, Any]:
        match: dict[str, Any] = {"agent": self.agent_name}
        if self.prompt_substring:
            match["contains"] = self.prompt_substring
        if self.prompt_digest is not None:
            match["digest"] = self.prompt_digest
        response: dict[str, Any] = {"actions": [action_to_dict(a) for a in self.actions]}
        if self.usage is not None:
            response["usage"] = {
                "input_tokens": self.usage.input_tokens,
                "output_tokens": self.usage.output_tokens,
            }
        return {"match": match, "response": response}

    @classmethod
    def from_dict(cls, raw: Any) -> "FixtureEntry":
        if not isinstance(raw, dict) or "match" not in raw or "response" not in raw:
            raise FixtureFormatError("fixture entry needs 'match' and 'response'")
        match = raw["match"]
        if not isinstance(match, dict) or "agent" not in match:
            raise FixtureFormatError("match needs an 'agent'")
        actions, usage = response_from_dict(raw["response"])
        return cls(
            agent_name=str(match["agent"]),
            actions=actions,
            prompt_substring=str(match.get("contains", "")),
            prompt_digest=match.get("digest"),
            usage=usage,
        )


def load_fixture(path: str | Path) -> list[FixtureEntry]:
    entries = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            entries.append(FixtureEntry.from_dict(json.loads(line)))
        except (json.JSONDecodeError, FixtureFormatError) as err:
            raise FixtureFormatError(f"{path}:{n}: {err}") from None
    return entries


def dump_fixture(entries: Iterable[FixtureEntry], path: str | Path) -> None:
    text = "".join(json.dumps(e.to_dict(), sort_keys=True) + "\n" for e in entries)
    Path(path).write_text(text, encoding="utf-8")


def estimate_usage(req: ProviderRequest, actions: Iterable[AgentAction]) -> Usage:
    out = json.dumps([action_to_dict(a) for a in actions], sort_keys=True)
    return Usage(estimate_tokens(req.prompt), estimate_tokens(out))


class ScriptedProvider:
    """Answers each request with the first unconsumed matching fixture entry."""

    def __init__(self, entries: Iterable[FixtureEntry]):
        self.entries = list(entries)
        self._used = [False] * len(self.entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        return cls(load_fixture(path))

    def complete(self, req: ProviderRequest) -> ProviderResponse:
        for i, entry in enumerate(self.entries):
            if not self._used[i] and entry.matches(req):
                self._used[i] = True
                usage = entry.usage or estimate_usage(req, entry.actions)
                return ProviderResponse(entry.actions, usage)
        raise NoFixtureMatch(req.agent_name, req.digest)

    @property
    def remaining(self) -> int:
        return self._used.count(False)

    def reset(self) -> None:
        self._used = [False] * len(self.entries)


class ReplayProvider(ScriptedProvider):
    """Scripted provider over a recorded fixture; every entry must carry a digest."""

    def __init__(self, entries: Iterable[FixtureEntry]):
        entries = list(entries)
        for i, e in enumerate(entries, 1):
            if e.prompt_digest is None:
                raise FixtureFormatError(f"replay fixture entry {i} has no request digest")
        super().__init__(entries)


class RecordingProvider:
    """Wraps a provider and records (request digest, response) pairs."""

    def __init__(self, inner: Provider):
        self.inner = inner
        self.entries: list[FixtureEntry] = []

    def complete(self, req: ProviderRequest) -> ProviderResponse:
        resp = self.inner.complete(req)
        self.entries.append(
            FixtureEntry(req.agent_name, resp.actions, prompt_digest=req.digest, usage=resp.usage)
        )
        return resp

    def save(self, path: str | Path) -> None:
        dump_fixture(self.entries, path)
