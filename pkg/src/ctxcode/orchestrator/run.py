"""The end-to-end run: plan, retrieve, delegate, edit, test, review, integrate."""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from ..context import ContextEntry, ContextStack, ProjectMemory, TaskSpec, new_stack
from ..errors import (
    CommandNotFound,
    CtxError,
    DiffReplayMismatch,
    EmptyCorpus,
    EmptyIndex,
    ReviewerUnavailable,
    StepBlocked,
    TestsFailed,
)
from ..knowledge import KnowledgeSummary, load_corpus, search_corpus, synthesize
from ..locks import FileLockTable, LockEvent
from ..provider import Provider, ProviderRequest, ProviderResponse, response_to_dict
from ..registry import Registry, load_registry
from ..retrieval.embedding import Embedder, NGramEmbedder
from ..retrieval.index import MemoryIndex
from ..retrieval.search import CodeIndex, RetrievalQuery, ScoredSnippet, index_repository, retrieve
from ..tools import Sandbox, ToolResult
from .config import RunConfig
from .delegation import StepExecution, StepOutcome, step_excerpt, step_stack
from .diffs import DEFAULT_EXCLUDE, ChangeSet, Snapshot
from .planning import Plan, PlanStep, StepStatus, make_plan, translate_intent
from .review import ReviewSuggestion, Severity, apply_suggestions, review_changes
from .states import State, StateMachine
from .transcript import EventKind, Transcript

EXIT_DONE, EXIT_FAILED, EXIT_PAUSED = 0, 2, 3

ConfirmFn = Callable[[Sequence[ReviewSuggestion]], bool]
TestRunner = Callable[[Sandbox], ToolResult]


@dataclass(frozen=True)
class TestReport:
    passed: bool
    output: str
    exit_code: int | None

    __test__ = False  # not a pytest class


def run_validation(sandbox: Sandbox, config: RunConfig | None = None) -> TestReport:
    """Run the configured test command (or injected runner) once."""
    if sandbox.test_runner is None and not sandbox.test_command:
        raise CommandNotFound("no test command configured")
    result = sandbox.run_tests()
    return TestReport(result.ok, result.content, result.exit_code)


@dataclass
class StepRecord:
    """A finished delegation: the plan step (or fix) and the files it wrote."""

    step: PlanStep
    outcome: StepOutcome


def attribute_failure(output: str, records: Sequence[StepRecord]) -> StepRecord:
    """The latest step whose files appear in ``output``, else the last finished step."""
    if not records:
        raise ValueError("no finished steps to attribute a failure to")
    for rec in reversed(records):
        paths = list(rec.outcome.edits) + list(rec.step.files)
        for path in paths:
            if path in output or os.path.basename(path) in output:
                return rec
    return records[-1]


@dataclass
class RunResult:
    final_state: State
    transcript: Transcript
    change_set: ChangeSet | None = None
    spec: TaskSpec | None = None
    plan: Plan | None = None
    error: str | None = None
    error_type: str | None = None
    failed_at_seq: int | None = None
    test_reports: list[TestReport] = field(default_factory=list)
    suggestions: list[ReviewSuggestion] = field(default_factory=list)
    applied_suggestions: list[ReviewSuggestion] = field(default_factory=list)
    outcomes: list[StepOutcome] = field(default_factory=list)
    history: list[ContextEntry] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.final_state is State.DONE:
            return "done"
        if self.final_state is State.FAILED:
            return "failed"
        return "paused"

    @property
    def exit_code(self) -> int:
        return {"done": EXIT_DONE, "failed": EXIT_FAILED}.get(self.status, EXIT_PAUSED)

    @property
    def test_retries(self) -> int:
        path = self.transcript.state_path()
        return sum(1 for a, b in zip(path, path[1:]) if (a, b) == ("Test", "Delegate"))


class TracedProvider:
    """Provider wrapper that records every call, with usage, in the transcript."""

    def __init__(self, inner: Provider, record: Callable[[ProviderRequest, ProviderResponse], None]):
        self.inner = inner
        self.record = record

    def complete(self, req: ProviderRequest) -> ProviderResponse:
        resp = self.inner.complete(req)
        self.record(req, resp)
        return resp


def default_questions(spec: TaskSpec) -> list[str]:
    return [f"How is {term} handled?" for term in spec.search_terms]


def run_id_for(request: str, config: RunConfig, pre: Snapshot) -> str:
    h = hashlib.sha256()
    for part in (request, config.fingerprint(), pre.digest):
        h.update(part.encode("utf-8", "surrogatepass") + b"\0")
    return h.hexdigest()[:16]


class _Run:
    def __init__(
        self,
        request: str,
        repo_root: str | Path,
        config: RunConfig,
        provider: Provider,
        registry: Registry | None,
        spec: TaskSpec | None,
        confirm: ConfirmFn | None,
        test_runner: TestRunner | None,
        embedder: Embedder | None,
        clock: Callable[[], float],
    ):
        self.root = Path(repo_root)
        if not self.root.is_dir():
            raise FileNotFoundError(f"repository root {self.root} does not exist")
        self.request = request
        self.config = config
        self.confirm = confirm
        self.embedder = embedder or NGramEmbedder()
        self.exclude = tuple(DEFAULT_EXCLUDE) + tuple(config.exclude)
        self.pre = Snapshot.capture(self.root, self.exclude)
        self.transcript = Transcript(run_id_for(request, config, self.pre), clock)
        self.machine = StateMachine()
        self.provider = TracedProvider(provider, self._record_call)
        self.locks = FileLockTable(self._record_lock)
        self.sandbox = Sandbox(self.root, self.locks, config.test_command, config.test_timeout,
                               test_runner)
        self.registry = registry
        self.result = RunResult(State.PLAN, self.transcript, spec=spec)
        self.records: list[StepRecord] = []
        self.snippets: dict[str, list[ScoredSnippet]] = {}

    # -- transcript helpers -------------------------------------------------------------

    @property
    def state(self) -> str:
        return self.machine.current.value if self.machine.current else "start"

    def _enter(self, state: State) -> None:
        self.machine.enter(state)
        self.result.final_state = state
        self.transcript.append(state.value, "orchestrator", EventKind.STATE_ENTER, state.value)

    def _note(self, text: str, agent: str = "orchestrator") -> int:
        return self.transcript.append(self.state, agent, EventKind.NOTE, text, detail=text[:200]).seq

    def _record_call(self, req: ProviderRequest, resp: ProviderResponse) -> None:
        payload = req.prompt + "\0" + json.dumps(response_to_dict(resp), sort_keys=True)
        self.transcript.append(self.state, req.agent_name, EventKind.PROVIDER_CALL, payload,
                               resp.usage.input_tokens, resp.usage.output_tokens,
                               f"request={req.digest}")

    def _record_lock(self, ev: LockEvent) -> None:
        text = f"{ev.action} {ev.path}"
        self.transcript.append(self.state, ev.agent, EventKind.LOCK, text, detail=text)

    def _log(self, kind: str, agent: str, payload: str, inp: int, out: int, detail: str) -> None:
        self.transcript.append(self.state, agent, EventKind(kind), payload, inp, out, detail)

    # -- phases -------------------------------------------------------------------------

    def prepare(self) -> None:
        """Plan state: intent, knowledge, spec-level retrieval and the plan itself."""
        cfg = self.config
        self._enter(State.PLAN)
        if self.registry is None:
            self.registry = load_registry(self.root / cfg.agents_dir, extension=cfg.agent_extension)
        if self.result.spec is None:
            self.result.spec = translate_intent(self.request, self.provider, self.registry,
                                                cfg.max_output_tokens)
        spec = self.result.spec
        self.memory = ProjectMemory.load(self.root, cfg.memory_path)
        self.knowledge = self._knowledge(spec)
        self.index = self._index()
        query = " ".join([spec.title, spec.clarified_goal, *spec.search_terms])
        plan_snippets = self._retrieve(query)
        self.result.plan = make_plan(spec, self.knowledge, plan_snippets, self.provider,
                                     self.registry, cfg.planner_role, cfg.token_budget_per_agent,
                                     cfg.max_output_tokens)
        self._note(f"plan with {len(self.result.plan)} steps")

    def _knowledge(self, spec: TaskSpec) -> KnowledgeSummary | None:
        if not self.config.corpus_dir:
            return None
        corpus = Path(self.config.corpus_dir)
        if not corpus.is_absolute():
            corpus = self.root / corpus
        try:
            docs = search_corpus(load_corpus(corpus), spec.search_terms or [spec.title],
                                 self.config.k_knowledge, self.embedder)
        except EmptyCorpus:
            self._note("knowledge corpus is empty; layer L2 left empty")
            return None
        provider = self.provider if self.config.knowledge_use_provider else None
        summary = synthesize(docs, default_questions(spec), provider)
        self._note("knowledge: " + ", ".join(d.origin for d in docs))
        return summary

    def _index(self) -> CodeIndex:
        backend = MemoryIndex(self.embedder.dims, self.embedder.id)
        stats = index_repository(self.root, backend, self.embedder, exclude=self.exclude)
        self._note(f"index {stats}")
        return CodeIndex(self.root, backend, self.embedder)

    def _retrieve(self, text: str) -> list[ScoredSnippet]:
        if not text.strip():
            return []
        self.index.invalidate()
        try:
            found = retrieve(self.index, RetrievalQuery(text, self.config.k_retrieval))
        except EmptyIndex:
            return []
        # grounding: only snippets whose file exists right now
        return [s for s in found if (self.root / s.chunk.repo_rel_path).is_file()]

    def _base_stack(self) -> ContextStack:
        stack = new_stack(self.result.spec, self.memory)
        if self.knowledge is not None:
            for doc_id in self.knowledge.toc:
                stack.add("L2", ContextEntry(f"doc:{doc_id}", self.knowledge.render_doc(doc_id)))
            if self.knowledge.qa_pairs:
                stack.add("L2", ContextEntry("qa", self.knowledge.render_qa()))
        return stack

    def _execute(self, step: PlanStep, excerpt: str, history: Sequence[ContextEntry]) -> StepOutcome:
        cfg = self.config
        profile = self.registry.get(step.assigned_role)
        stack = step_stack(self.base, excerpt, self.snippets.get(step.id, []), history)
        execution = StepExecution(profile, stack, self.provider, self.sandbox, step.id,
                                  cfg.token_budget_per_agent, cfg.max_output_tokens,
                                  cfg.action_cap, self._log)
        outcome = execution.run()
        self.result.outcomes.append(outcome)
        self.records.append(StepRecord(step, outcome))
        if outcome.status == "blocked":
            raise StepBlocked(f"step {step.id} blocked: {outcome.note or 'no reason given'}")
        return outcome

    def _validate(self) -> TestReport:
        if self.sandbox.test_runner is None and not self.sandbox.test_command:
            self._note("no test command configured; validation skipped")
            report = TestReport(True, "no test command configured", None)
        else:
            report = run_validation(self.sandbox, self.config)
            self._note(f"tests {'passed' if report.passed else 'failed'} (exit {report.exit_code})\n"
                       + report.output)
        self.result.test_reports.append(report)
        return report

    def execute(self) -> None:
        cfg = self.config
        plan = self.result.plan
        self._enter(State.RETRIEVE_CONTEXT)
        for step in plan.steps:
            self.snippets[step.id] = self._retrieve(f"{step.description} {' '.join(step.files)}")
        self.base = self._base_stack()

        self._enter(State.DELEGATE)
        order = plan.execution_order()
        excerpts = {s.id: step_excerpt(plan, s, n, len(order)) for n, s in enumerate(order, 1)}
        self._enter(State.EDIT)
        for step in order:
            if not plan.ready(step):
                raise StepBlocked(f"step {step.id} has unfinished dependencies")
            step.status = StepStatus.IN_PROGRESS
            try:
                self._execute(step, excerpts[step.id], ())
            except CtxError:
                step.status = StepStatus.FAILED
                raise
            step.status = StepStatus.DONE

        retries = 0
        while True:
            self._enter(State.TEST)
            report = self._validate()
            if report.passed:
                break
            self.result.history.append(
                ContextEntry(f"test-output:run{len(self.result.test_reports)}", report.output)
            )
            if retries >= cfg.max_test_retries:
                raise TestsFailed(
                    f"tests still failing after {retries} fix attempt(s) (exit {report.exit_code})"
                )
            retries += 1
            owner = attribute_failure(report.output, self.records)
            fix = PlanStep(f"fix-{retries}", f"Fix attempt {retries}: make the failing tests pass",
                           owner.step.assigned_role, files=list(owner.outcome.edits or owner.step.files))
            self.snippets[fix.id] = self.snippets.get(owner.step.id, [])
            self._enter(State.DELEGATE)
            self._note(f"test failure attributed to step {owner.step.id} ({fix.assigned_role})")
            excerpt = (
                f"Fix attempt {retries}: the test suite failed after the plan was executed. "
                f"The failure was attributed to step {owner.step.id}: {owner.step.description}\n"
                "The test output is in the execution artifacts below. Make the tests pass."
            )
            self._enter(State.EDIT)
            self._execute(fix, excerpt, self.result.history)

    def review(self) -> bool:
        """Review gate; False when the run pauses for confirmation."""
        cfg = self.config
        self._enter(State.REVIEW)
        before = Snapshot.capture(self.root, self.exclude)
        interim = ChangeSet.between(self.pre, before)
        try:
            suggestions = review_changes(interim, self.provider, self.registry, cfg.reviewer_role,
                                         cfg.max_output_tokens)
        except ReviewerUnavailable as err:
            if not cfg.skip_review_if_missing:
                raise
            self._note(f"review skipped: {err}")
            return True
        self.result.suggestions = suggestions
        for s in suggestions:
            self._note(f"review {s.severity.value} {s.path}: {s.suggestion}", cfg.reviewer_role)
        blocking = [s for s in suggestions if s.severity is Severity.BLOCKING]
        if blocking:
            approved = self.confirm(blocking) if self.confirm is not None else False
            if not approved:
                before.restore(self.root)
                self._note(f"paused: {len(blocking)} blocking suggestion(s) await confirmation")
                return False
            self._note("blocking suggestions acknowledged by the operator")
        applicable = [s for s in suggestions if s.auto_applicable(cfg.auto_apply_max_severity)]
        if applicable:
            self._enter(State.EDIT)
            applied, skipped = apply_suggestions(applicable, self.sandbox, cfg.auto_apply_max_severity,
                                                 log=self._log)
            self.result.applied_suggestions = applied
            for s in applied:
                self._note(f"applied review suggestion to {s.path}")
            for s, why in skipped:
                self._note(f"skipped review suggestion on {s.path}: {why}")
        return True

    def integrate(self) -> None:
        self._enter(State.INTEGRATE_PR)
        post = Snapshot.capture(self.root, self.exclude)
        self.result.change_set = integrate(self.pre, post, self._summary(post))
        self._enter(State.DONE)

    def _summary(self, post: Snapshot) -> str:
        spec, plan = self.result.spec, self.result.plan
        lines = [f"Task: {spec.title}", "", "Plan:", plan.summary(), ""]
        tests = self.result.test_reports
        lines.append(f"Test runs: {len(tests)} ({sum(not t.passed for t in tests)} failed)")
        applied = self.result.applied_suggestions
        lines.append(f"Review suggestions: {len(self.result.suggestions)} ({len(applied)} applied)")
        for s in applied:
            lines.append(f"- {s.severity.value} {s.path}: {s.suggestion}")
        touched = sorted(p for p in set(self.pre.files) | set(post.files)
                         if self.pre.files.get(p) != post.files.get(p))
        lines.append("Files touched: " + (", ".join(touched) if touched else "none"))
        return "\n".join(lines) + "\n"

    def fail(self, err: Exception) -> None:
        seq = self._note(f"{type(err).__name__}: {err}")
        self.result.error = str(err)
        self.result.error_type = type(err).__name__
        self.result.failed_at_seq = seq
        if self.result.plan is not None:
            for s in self.result.plan.steps:
                if s.status is StepStatus.IN_PROGRESS:
                    s.status = StepStatus.FAILED
        self._enter(State.FAILED)

    def release_leaks(self) -> None:
        for path, agent in self.locks.held().items():
            self.locks.release(path, agent)
            self._note(f"released leaked lock on {path} held by {agent}")

    def partial_change_set(self) -> None:
        if self.result.change_set is None:
            post = Snapshot.capture(self.root, self.exclude)
            self.result.change_set = ChangeSet.between(
                self.pre, post, f"Run ended in {self.result.final_state.value}\n"
            )


def integrate(pre: Snapshot, post: Snapshot, summary: str = "") -> ChangeSet:
    """ChangeSet from pre to post; raises DiffReplayMismatch if the diff does not replay."""
    change_set = ChangeSet.between(pre, post, summary)
    if not change_set.replays(pre, post):
        raise DiffReplayMismatch("the unified diff does not reproduce the post-run workspace")
    return change_set


def _make_run(
    user_request, repo_root, config, provider, registry, spec, confirm, test_runner, embedder, clock
) -> _Run:
    if spec is None and (not user_request or not user_request.strip()):
        raise ValueError("the request must be non-empty")
    if not user_request and spec is not None:
        user_request = spec.title
    return _Run(user_request, repo_root, config or RunConfig(), provider, registry, spec,
                confirm, test_runner, embedder, clock)


def run_task(
    user_request: str,
    repo_root: str | Path,
    config: RunConfig | None = None,
    provider: Provider | None = None,
    *,
    registry: Registry | None = None,
    spec: TaskSpec | None = None,
    confirm: ConfirmFn | None = None,
    test_runner: TestRunner | None = None,
    embedder: Embedder | None = None,
    clock: Callable[[], float] = time.time,
) -> RunResult:
    """Run the full pipeline on ``repo_root``.

    Any phase error ends the run in Failed with ``failed_at_seq`` pointing at
    the note event describing it. Locks are always released.
    """
    if provider is None:
        raise ValueError("a provider is required")
    run = _make_run(user_request, repo_root, config, provider, registry, spec, confirm,
                    test_runner, embedder, clock)
    try:
        run.prepare()
        run.execute()
        if run.review():
            run.integrate()
    except (CtxError, OSError) as err:
        run.fail(err)
    finally:
        run.release_leaks()
    run.partial_change_set()
    return run.result


def plan_task(
    user_request: str,
    repo_root: str | Path,
    config: RunConfig | None = None,
    provider: Provider | None = None,
    *,
    registry: Registry | None = None,
    spec: TaskSpec | None = None,
    embedder: Embedder | None = None,
    clock: Callable[[], float] = time.time,
) -> RunResult:
    """Dry run that stops after planning; the workspace is never written."""
    if provider is None:
        raise ValueError("a provider is required")
    run = _make_run(user_request, repo_root, config, provider, registry, spec, None, None,
                    embedder, clock)
    try:
        run.prepare()
    except (CtxError, OSError) as err:
        run.fail(err)
    return run.result
