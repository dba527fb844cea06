import json

import pytest

from ctxcode.errors import MalformedTranscript
from ctxcode.orchestrator.transcript import (EventKind, Transcript, audit_locks, format_report, read_transcript,
                                             token_ratio)
from oracles import independent_totals


def tiny(calls, run_id="r"):
    t = Transcript(run_id, clock=lambda: 1.5)
    t.append("Plan", "orchestrator", EventKind.STATE_ENTER, "Plan")
    for agent, i, o in calls:
        t.append("Plan", agent, EventKind.PROVIDER_CALL, f"{agent}{i}", i, o)
    return t


def test_two_calls_total_30(tmp_path):
    t = tiny([("planner", 10, 5), ("worker", 10, 5)])
    assert t.totals.messages == 2 and t.totals.total_tokens == 30
    t.write(tmp_path / "t.log")
    back = read_transcript(tmp_path / "t.log")
    assert back.dumps() == t.dumps()
    report = format_report(back)
    assert "messages: 2\n" in report and "total_tokens: 30\n" in report
    assert "  planner: messages=1 input_tokens=10 output_tokens=5" in report
    assert independent_totals(tmp_path / "t.log") == (2, 20, 10)


def test_ratio_exact():
    run = tiny([("a", 60, 30)])
    base = tiny([("a", 20, 10)])
    assert token_ratio(run, base) == "3.00x"
    assert format_report(run, base).endswith("baseline_total_tokens: 30\ntoken_ratio: 3.00x\n")
    assert token_ratio(run, tiny([])) == "inf"


def test_event_format():
    t = tiny([("a", 1, 2)])
    rec = json.loads(t.lines()[2])
    assert set(rec) == {"seq", "wall_time", "state", "agent", "kind", "digest", "usage", "detail"}
    assert rec["seq"] == 2 and len(rec["digest"]) == 64
    assert json.loads(t.lines()[-1]) == {"totals": {"messages": 1, "input_tokens": 1, "output_tokens": 2}}
    with pytest.raises(ValueError):
        t.append("Plan", "a", EventKind.NOTE, "x", -1)


def _corrupt(tmp_path, mutate):
    lines = tiny([("a", 10, 5), ("b", 10, 5)]).dumps().splitlines(keepends=True)
    path = tmp_path / "bad.log"
    path.write_text("".join(mutate(lines)))
    with pytest.raises(MalformedTranscript) as info:
        read_transcript(path)
    return info.value


@pytest.mark.parametrize("mutate,line", [
    (lambda ls: ls[:-1], 5),                                   # totals line missing
    (lambda ls: ls[:-1] + [ls[-1].rstrip("\n")], 5),           # no trailing newline
    (lambda ls: ls[:2] + ["{not json\n"] + ls[3:], 3),
    (lambda ls: [ls[0], ls[2], ls[1]] + ls[3:], 2),            # seq out of order
    (lambda ls: ls[:-1] + ['{"totals": {"messages": 2, "input_tokens": 21, "output_tokens": 10}}\n'], 5),
    (lambda ls: ls[:3] + [ls[3].replace('"input_tokens": 10', '"input_tokens": -10')] + ls[4:], 4),
    (lambda ls: ['{"run_id": "x"}\n'] + ls[1:], 1),
    (lambda ls: ls + [ls[1]], 6),
    (lambda ls: [], 1),
])
def test_corruption_names_line(tmp_path, mutate, line):
    assert _corrupt(tmp_path, mutate).line == line


def lock_log(events):
    t = Transcript("r", clock=lambda: 0.0)
    for agent, kind, detail in events:
        t.append("Edit", agent, kind, detail, detail=detail)
    return t


def test_audit_locks():
    L, T = EventKind.LOCK, EventKind.TOOL_CALL
    sound = [("a", L, "acquire x"), ("a", T, "Write path=x ok=True"), ("a", L, "release x"),
             ("b", L, "acquire x"), ("b", T, "Edit path=x ok=True"), ("b", L, "release x")]
    assert audit_locks(lock_log(sound)) == []
    assert len(audit_locks(lock_log([("a", L, "acquire x"), ("b", L, "acquire x")]))) == 2
    assert audit_locks(lock_log([("a", T, "Write path=x ok=True")])) == ["seq 1: a wrote x without its lock"]
    assert audit_locks(lock_log([("a", T, "Write path=x ok=False")])) == []
    assert audit_locks(lock_log([("a", L, "release x")])) == ["seq 1: a released x it does not hold"]
    assert audit_locks(lock_log([("a", L, "acquire x")])) == ["lock on x still held by a at the end"]
