"""Randomized scripted scenarios for exercising the orchestrator.

A scenario is a tiny workspace, a fixture-driven provider, an injected test
runner with a predetermined pass/fail sequence, and the outcome the state
machine must produce. Used by the soundness suite and the sweep scripts.
"""

from __future__ import annotations

import json
import random
import shutil
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

from .context import SubtaskSpec, TaskSpec
from .orchestrator.config import RunConfig
from .orchestrator.states import State
from .provider import FixtureEntry, ScriptedProvider, action_from_dict
from .tools import Sandbox, ToolResult

WORKERS = ("worker-a", "worker-b")

_AGENT_TEMPLATE = """name: {name}
description: {description}
tools: {tools}

You are {name}. {description}
"""

_AGENTS = {
    "planner": ("Splits work into steps.", "Read, Grep"),
    "worker-a": ("Edits application modules.", "Read, Write, Edit"),
    "worker-b": ("Edits application modules and notes.", "Read, Write, Edit"),
    "code-reviewer": ("Reviews diffs.", "Read, Grep"),
}

_APP = '''"""Tiny application used by synthetic scenarios."""


def greet(name):
    return "hello " + name


def total(values):
    return sum(values)


# todo 0
# todo 1
# todo 2
'''


def write_workspace(root: str | Path, with_reviewer: bool = True) -> Path:
    root = Path(root)
    (root / "agents").mkdir(parents=True, exist_ok=True)
    (root / "src").mkdir(exist_ok=True)
    for name, (description, tools) in _AGENTS.items():
        if name == "code-reviewer" and not with_reviewer:
            continue
        (root / "agents" / f"{name}.agent").write_text(
            _AGENT_TEMPLATE.format(name=name, description=description, tools=tools), encoding="utf-8"
        )
    (root / "src" / "app.py").write_text(_APP, encoding="utf-8")
    (root / "PROJECT.md").write_text("# Memory\n\nKeep functions small.\n", encoding="utf-8")
    return root


def _entry(agent: str, contains: str, *actions: dict) -> FixtureEntry:
    return FixtureEntry(agent, tuple(action_from_dict(a) for a in actions), contains)


def _msg(payload) -> dict:
    return {"type": "message", "content": json.dumps(payload, sort_keys=True)}


def _done(status: str = "complete") -> dict:
    return {"type": "done", "status": status, "note": ""}


@dataclass
class Scenario:
    seed: int
    spec: TaskSpec
    entries: list[FixtureEntry]
    test_outcomes: list[bool]
    severities: list[str]
    confirm_answer: bool | None
    config: RunConfig
    with_reviewer: bool = True
    blocked_step: int | None = None
    shared_file: bool = False
    expected_state: State = State.DONE
    expected_retries: int = 0
    expected_applied: int = 0

    def provider(self) -> ScriptedProvider:
        return ScriptedProvider(self.entries)

    def test_runner(self):
        pending = list(self.test_outcomes)
        calls = [0]

        def run(_sandbox: Sandbox) -> ToolResult:
            calls[0] += 1
            if pending.pop(0) if pending else True:
                return ToolResult(True, f"run {calls[0]}: all checks passed", 0)
            return ToolResult(False, f"run {calls[0]}: FAILED src/app.py::test_greet", 1)

        return run

    def confirm(self):
        if self.confirm_answer is None:
            return None
        answer = self.confirm_answer
        return lambda _blocking: answer


def random_scenario(seed: int, rng: random.Random | None = None) -> Scenario:
    """A scenario plus the final state, retry count and applied-suggestion count it must produce."""
    rng = rng or random.Random(seed)
    retries = rng.randint(0, 3)
    n_steps = rng.randint(1, 3)
    shared = n_steps > 1 and rng.random() < 0.3
    blocked = rng.randrange(n_steps) if rng.random() < 0.05 else None
    with_reviewer = rng.random() < 0.9

    spec = TaskSpec(
        title=f"synthetic task {seed}",
        clarified_goal="change the tiny app",
        subtasks=[SubtaskSpec(i + 1, f"subtask {i + 1}") for i in range(n_steps)],
        search_terms=["greet"],
    )
    steps = []
    for i in range(n_steps):
        path = "notes/shared.txt" if shared else f"notes/step{i + 1}.txt"
        steps.append({"id": f"s{i + 1}", "description": f"write note {i + 1}",
                      "role": rng.choice(WORKERS), "depends_on": [f"s{i}"] if i else [],
                      "files": [path]})
    entries = [_entry("planner", "Available roles:", _msg({"steps": steps}))]
    for i, step in enumerate(steps):
        marker = f"plan step {i + 1} of {n_steps}"
        if blocked == i:
            entries.append(_entry(step["role"], marker, _done("blocked")))
            continue
        path = step["files"][0]
        token = f"value_{seed}_{i + 1}"
        if shared and i > 0:
            write = {"type": "tool", "tool": "Edit",
                     "args": {"path": path, "find": f"value_{seed}_{i}", "replace": token}}
        else:
            write = {"type": "tool", "tool": "Write",
                     "args": {"path": path, "content": f"{token} = 1\n"}}
        if rng.random() < 0.5:
            entries.append(_entry(step["role"], marker,
                                  {"type": "tool", "tool": "Read", "args": {"path": "src/app.py"}}))
        entries.append(_entry(step["role"], marker, write, _done()))

    # test outcomes: failures until the first pass (or forever)
    fails_before_pass = rng.choice([0, 0, 1, 1, 2, 3, 4, 5])
    outcomes = [False] * fails_before_pass + [True]
    for k in range(1, 6):
        for role in WORKERS:
            entries.append(_entry(role, f"Fix attempt {k}",
                                  {"type": "tool", "tool": "Write",
                                   "args": {"path": f"fixes/fix{k}.txt", "content": f"fix {k}\n"}},
                                  _done()))

    severities = [rng.choice(["minor", "minor", "major", "blocking"]) for _ in range(rng.randint(0, 3))]
    suggestions = []
    for j, sev in enumerate(severities):
        s = {"severity": sev, "path": "src/app.py", "anchor": "def greet",
             "suggestion": f"suggestion {j}"}
        if rng.random() < 0.7:
            s["proposed_edit"] = {"find": f"# todo {j}", "replace": f"# done {j}"}
        suggestions.append(s)
    entries.append(_entry("code-reviewer", "Files touched:", _msg({"suggestions": suggestions})))
    confirm_answer = rng.choice([None, True, False])

    config = RunConfig(max_test_retries=retries, auto_apply_max_severity=rng.choice(["minor", "none"]))
    sc = Scenario(seed, spec, entries, outcomes, severities, confirm_answer, config, with_reviewer,
                  blocked, shared)
    sc.expected_state, sc.expected_retries, sc.expected_applied = _expected(sc, suggestions)
    return sc


def _expected(sc: Scenario, suggestions: Sequence[dict]) -> tuple[State, int, int]:
    """Independent model of how the run must end."""
    if sc.blocked_step is not None:
        return State.FAILED, 0, 0
    fails = sc.test_outcomes.index(True)
    retries = sc.config.max_test_retries
    if fails > retries:
        return State.FAILED, retries, 0
    if not sc.with_reviewer or not suggestions:
        return State.DONE, fails, 0
    if any(s["severity"] == "blocking" for s in suggestions) and not sc.confirm_answer:
        return State.REVIEW, fails, 0
    applied = 0
    if sc.config.auto_apply_max_severity == "minor":
        applied = sum(1 for s in suggestions if s["severity"] == "minor" and "proposed_edit" in s)
    return State.DONE, fails, applied


def run_scenario(sc: Scenario, root: str | Path, clock=None) -> "RunResult":
    """Write the scenario workspace under ``root`` and run it."""
    from .orchestrator.run import run_task

    repo = write_workspace(root, sc.with_reviewer)
    kwargs = {"clock": clock} if clock is not None else {}
    return run_task(sc.spec.title, repo, sc.config, sc.provider(), spec=sc.spec,
                    confirm=sc.confirm(), test_runner=sc.test_runner(), **kwargs)


@dataclass(frozen=True)
class StagedScenario:
    """A bundled scenario copied somewhere it can be modified."""

    repo: Path
    config_path: Path
    fixture_path: Path
    request: str


def stage_scenario(scenario_dir: str | Path, workdir: str | Path) -> StagedScenario:
    """Copy ``repo/`` and ``corpus/`` of a scenario directory into ``workdir``."""
    src, dst = Path(scenario_dir), Path(workdir)
    shutil.copytree(src / "repo", dst / "repo")
    if (src / "corpus").is_dir():
        shutil.copytree(src / "corpus", dst / "corpus")
    return StagedScenario(dst / "repo", src / "config.toml", src / "fixture.jsonl",
                          (src / "task.txt").read_text(encoding="utf-8").strip())


# -- generated source files ----------------------------------------------------------

_PY_DECLS = {
    "function": lambda name, rng: (
        ["@staticmethod\n"] if rng.random() < 0.2 else []) + [f"def {name}(a, b=1):\n"]
        + [f"    x{i} = a + {i}\n" for i in range(rng.randint(0, 3))]
        + (["\n", "    # inner comment\n"] if rng.random() < 0.3 else []) + ["    return a\n"],
    "type_definition": lambda name, rng: [f"class {name}:\n", '    """Doc."""\n']
        + [f"    def m{i}(self):\n        return {i}\n" for i in range(rng.randint(0, 2))],
}
_JS_DECLS = {
    "function": lambda name, rng: [f"export function {name}(a, b) {{\n",
                                   f"  const s = '{{ not a brace';\n",
                                   "  if (a) {\n    return b;\n  }\n", "  return a;\n", "}\n"],
    "type_definition": lambda name, rng: [f"class {name} {{\n", "  run() {\n    return `x ${1}`;\n  }\n",
                                          "}\n"],
}
_GO_DECLS = {
    "function": lambda name, rng: [f"func {name}(a int) int {{\n", "\tif a > 0 {\n\t\treturn a\n\t}\n",
                                   "\treturn 0\n", "}\n"],
    "type_definition": lambda name, rng: [f"type {name} struct {{\n", "\tA int\n", "}\n"],
}
_REMAINDER = {
    "python": ["import os\n", "X = 1\n", "# a comment line\n", "print('hello {')\n"],
    "javascript": ["import x from './x';\n", "const LIMIT = 3;\n", "// comment { not a brace\n",
                   "/* block\n comment */\n"],
    "go": ["package main\n", "var limit = 3\n", "// comment {\n", 'import "fmt"\n'],
}


def random_source(rng: random.Random, language: str) -> tuple[str, list[tuple[str, str]]]:
    """A source file and the (kind, symbol) sequence its chunks must have.

    ``kind`` is ``function``, ``type_definition`` or ``file_remainder``. The
    expectation follows the tiling rule: each declaration is one chunk, and
    each maximal run of other lines that is not entirely blank is one
    remainder chunk (blank-only runs fold into a neighbour).
    """
    decls = {"python": _PY_DECLS, "javascript": _JS_DECLS, "go": _GO_DECLS}[language]
    lines: list[str] = []
    expected: list[tuple[str, str]] = []
    gap_has_text = False
    for i in range(rng.randint(0, 8)):
        choice = rng.random()
        if choice < 0.45:
            if gap_has_text:
                expected.append(("file_remainder", ""))
            gap_has_text = False
            kind = rng.choice(sorted(decls))
            name = f"{'f' if kind == 'function' else 'T'}{i}"
            lines.extend(decls[kind](name, rng))
            expected.append((kind, name))
        elif choice < 0.75:
            lines.append(rng.choice(_REMAINDER[language]))
            gap_has_text = True
        else:
            lines.extend("\n" * rng.randint(1, 2))
    if gap_has_text:
        expected.append(("file_remainder", ""))
    text = "".join(lines)
    if text and rng.random() < 0.2:
        text = text.rstrip("\n")  # no trailing newline
    if not text:
        expected = []
    elif not text.strip():
        expected = [("file_remainder", "")]
    return text, expected


# -- retrieval corpus ------------------------------------------------------------------

_VOCAB = ("user", "order", "invoice", "cart", "price", "stock", "email", "report", "cache",
          "queue", "route", "token", "session", "page", "block", "layout", "theme", "upload")
PLANTED_IDENTIFIER = "renewSession"


def function_corpus(root: str | Path, seed: int = 0, files: int = 10, per_file: int = 5) -> list[str]:
    """Write ``files`` Python modules of ``per_file`` functions each; return the function names.

    Exactly one function calls ``renewSession`` and one comment mentions it, so
    a literal search finds two lines and only one chunk holds the identifier
    in code.
    """
    rng = random.Random(seed)
    root = Path(root)
    (root / "pkg").mkdir(parents=True, exist_ok=True)
    names = []
    planted_file = rng.randrange(files)
    planted_fn = rng.randrange(per_file)
    for f in range(files):
        body = [f'"""Module {f}."""\n', "\n"]
        for k in range(per_file):
            a, b, c = rng.sample(_VOCAB, 3)
            name = f"{a}_{b}_{f}_{k}"
            names.append(name)
            body += [
                "\n",
                f"def {name}({a}, {b}_id=None):\n",
                f"    {c}_total = len({a}) + {k}\n",
                f"    if {b}_id is not None:\n",
                f"        {c}_total += {b}_id\n",
            ]
            if (f, k) == (planted_file, planted_fn):
                body.append(f"    {PLANTED_IDENTIFIER}({a})  # {PLANTED_IDENTIFIER} keeps it alive\n")
            body.append(f"    return {c}_total\n")
        (root / "pkg" / f"mod{f}.py").write_text("".join(body), encoding="utf-8")
    return names
