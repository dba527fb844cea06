"""Append-only, token-accounted event log of one orchestration run.

File format (JSON lines):

* line 1: ``{"format": "ctxcode-transcript/1", "run_id": ...}``
* one line per event: ``seq``, ``wall_time``, ``state``, ``agent``, ``kind``,
  ``digest`` (lowercase hex sha256 of the payload), ``usage``
  (``input_tokens``/``output_tokens``) and a short ``detail``
* last line: ``{"totals": {"messages", "input_tokens", "output_tokens"}}``

``messages`` counts provider calls. Totals are kept as running counters while
events are appended; ``read_transcript`` recomputes them from the events and
rejects a file whose totals line disagrees.
"""

from __future__ import annotations

import enum
import json
import time
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from pathlib import Path

from ..errors import MalformedTranscript
from ..provider import sha256_hex

FORMAT = "ctxcode-transcript/1"


class EventKind(str, enum.Enum):
    STATE_ENTER = "state_enter"
    PROVIDER_CALL = "provider_call"
    TOOL_CALL = "tool_call"
    LOCK = "lock"
    NOTE = "note"


@dataclass(frozen=True)
class TranscriptEvent:
    seq: int
    wall_time: float
    state: str
    agent_name: str
    event_kind: EventKind
    payload_digest: str
    input_tokens: int = 0
    output_tokens: int = 0
    detail: str = ""

    def to_dict(self, with_time: bool = True) -> dict:
        d = {
            "seq": self.seq,
            "state": self.state,
            "agent": self.agent_name,
            "kind": self.event_kind.value,
            "digest": self.payload_digest,
            "usage": {"input_tokens": self.input_tokens, "output_tokens": self.output_tokens},
            "detail": self.detail,
        }
        if with_time:
            d["wall_time"] = self.wall_time
        return d


@dataclass(frozen=True)
class Totals:
    messages: int = 0
    input_tokens: int = 0
    output_tokens: int = 0

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens


class Transcript:
    def __init__(self, run_id: str, clock: Callable[[], float] = time.time):
        self.run_id = run_id
        self.events: list[TranscriptEvent] = []
        self._clock = clock
        self._messages = self._in = self._out = 0

    def append(
        self,
        state: str,
        agent_name: str,
        kind: EventKind,
        payload: str,
        input_tokens: int = 0,
        output_tokens: int = 0,
        detail: str = "",
    ) -> TranscriptEvent:
        if input_tokens < 0 or output_tokens < 0:
            raise ValueError("token usage must be non-negative")
        event = TranscriptEvent(
            seq=len(self.events) + 1,
            wall_time=self._clock(),
            state=str(state),
            agent_name=agent_name,
            event_kind=EventKind(kind),
            payload_digest=sha256_hex(payload),
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            detail=detail,
        )
        self.events.append(event)
        if event.event_kind is EventKind.PROVIDER_CALL:
            self._messages += 1
        self._in += input_tokens
        self._out += output_tokens
        return event

    @property
    def totals(self) -> Totals:
        return Totals(self._messages, self._in, self._out)

    def state_path(self) -> list[str]:
        return [e.state for e in self.events if e.event_kind is EventKind.STATE_ENTER]

    def lines(self, with_time: bool = True) -> list[str]:
        out = [json.dumps({"format": FORMAT, "run_id": self.run_id}, sort_keys=True)]
        out.extend(json.dumps(e.to_dict(with_time), sort_keys=True) for e in self.events)
        t = self.totals
        out.append(
            json.dumps(
                {"totals": {"messages": t.messages, "input_tokens": t.input_tokens,
                            "output_tokens": t.output_tokens}},
                sort_keys=True,
            )
        )
        return out

    def dumps(self, with_time: bool = True) -> str:
        return "".join(line + "\n" for line in self.lines(with_time))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def recompute_totals(events: Iterable[TranscriptEvent]) -> Totals:
    messages = inp = out = 0
    for e in events:
        messages += e.event_kind is EventKind.PROVIDER_CALL
        inp += e.input_tokens
        out += e.output_tokens
    return Totals(messages, inp, out)


def _parse_event(raw: dict, line: int) -> TranscriptEvent:
    try:
        usage = raw["usage"]
        event = TranscriptEvent(
            seq=int(raw["seq"]),
            wall_time=float(raw["wall_time"]),
            state=str(raw["state"]),
            agent_name=str(raw["agent"]),
            event_kind=EventKind(raw["kind"]),
            payload_digest=str(raw["digest"]),
            input_tokens=int(usage["input_tokens"]),
            output_tokens=int(usage["output_tokens"]),
            detail=str(raw.get("detail", "")),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise MalformedTranscript(line, f"bad event record ({err})") from None
    if event.input_tokens < 0 or event.output_tokens < 0:
        raise MalformedTranscript(line, "negative token usage")
    digest = event.payload_digest
    if len(digest) != 64 or any(c not in "0123456789abcdef" for c in digest):
        raise MalformedTranscript(line, "payload digest is not lowercase hex sha256")
    return event


def read_transcript(path: str | Path) -> Transcript:
    """Parse and check a transcript file; raises MalformedTranscript naming the line."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    elif lines:
        raise MalformedTranscript(len(lines), "last line is not newline-terminated (truncated?)")
    if not lines:
        raise MalformedTranscript(1, "empty transcript")
    records = []
    for n, line in enumerate(lines, 1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as err:
            raise MalformedTranscript(n, f"invalid JSON ({err.msg})") from None
    header = records[0]
    if not isinstance(header, dict) or header.get("format") != FORMAT or "run_id" not in header:
        raise MalformedTranscript(1, "missing transcript header")
    transcript = Transcript(str(header["run_id"]))
    totals_seen: dict | None = None
    for n, raw in enumerate(records[1:], 2):
        if totals_seen is not None:
            raise MalformedTranscript(n, "record after totals line")
        if not isinstance(raw, dict):
            raise MalformedTranscript(n, "record is not an object")
        if "totals" in raw:
            totals_seen = raw["totals"]
            continue
        event = _parse_event(raw, n)
        if event.seq != len(transcript.events) + 1:
            raise MalformedTranscript(n, f"seq {event.seq} out of order")
        transcript.events.append(event)
    if totals_seen is None:
        raise MalformedTranscript(len(lines) + 1, "missing totals line (truncated?)")
    recomputed = recompute_totals(transcript.events)
    try:
        stated = Totals(int(totals_seen["messages"]), int(totals_seen["input_tokens"]),
                        int(totals_seen["output_tokens"]))
    except (KeyError, TypeError, ValueError):
        raise MalformedTranscript(len(lines), "bad totals line") from None
    if stated != recomputed:
        raise MalformedTranscript(len(lines), f"totals {stated} disagree with events {recomputed}")
    transcript._messages = recomputed.messages
    transcript._in, transcript._out = recomputed.input_tokens, recomputed.output_tokens
    return transcript


def format_report(transcript: Transcript, baseline: Transcript | None = None) -> str:
    """Human-readable metrics: totals, per-agent breakdown, state path, optional ratio."""
    totals = recompute_totals(transcript.events)
    per_agent: dict[str, list[int]] = {}
    for e in transcript.events:
        if e.event_kind is EventKind.PROVIDER_CALL or e.input_tokens or e.output_tokens:
            row = per_agent.setdefault(e.agent_name, [0, 0, 0])
            row[0] += e.event_kind is EventKind.PROVIDER_CALL
            row[1] += e.input_tokens
            row[2] += e.output_tokens
    lines = [
        f"run_id: {transcript.run_id}",
        f"messages: {totals.messages}",
        f"input_tokens: {totals.input_tokens}",
        f"output_tokens: {totals.output_tokens}",
        f"total_tokens: {totals.total_tokens}",
        "per_agent:",
    ]
    for agent in sorted(per_agent):
        m, i, o = per_agent[agent]
        lines.append(f"  {agent}: messages={m} input_tokens={i} output_tokens={o}")
    lines.append("state_path: " + " -> ".join(transcript.state_path()))
    if baseline is not None:
        lines.append(f"baseline_total_tokens: {recompute_totals(baseline.events).total_tokens}")
        lines.append(f"token_ratio: {token_ratio(transcript, baseline)}")
    return "\n".join(lines) + "\n"


def token_ratio(transcript: Transcript, baseline: Transcript) -> str:
    base = recompute_totals(baseline.events).total_tokens
    if base == 0:
        return "inf"
    return f"{recompute_totals(transcript.events).total_tokens / base:.2f}x"


def audit_locks(transcript: Transcript) -> list[str]:
    """Lock-safety violations visible in the event log (empty list when sound).

    Checks that every acquire finds the path free, every release comes from
    the holder, every successful Write/Edit happens under its writer's lock,
    and nothing is still held at the end.
    """
    holders: dict[str, str] = {}
    problems = []
    for e in transcript.events:
        if e.event_kind is EventKind.LOCK:
            action, _, path = e.detail.partition(" ")
            if action == "acquire":
                if path in holders:
                    problems.append(f"seq {e.seq}: {e.agent_name} acquired {path} held by {holders[path]}")
                holders[path] = e.agent_name
            elif holders.get(path) != e.agent_name:
                problems.append(f"seq {e.seq}: {e.agent_name} released {path} it does not hold")
            else:
                del holders[path]
        elif e.event_kind is EventKind.TOOL_CALL:
            tool, _, rest = e.detail.partition(" path=")
            if tool in ("Write", "Edit") and rest.endswith(" ok=True"):
                path = rest[: -len(" ok=True")]
                if holders.get(path) != e.agent_name:
                    problems.append(f"seq {e.seq}: {e.agent_name} wrote {path} without its lock")
    for path, agent in sorted(holders.items()):
        problems.append(f"lock on {path} still held by {agent} at the end")
    return problems
