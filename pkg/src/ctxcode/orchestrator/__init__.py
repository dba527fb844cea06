"""Orchestration: the state machine driving plan, delegation, testing, review and integration."""

from .config import RunConfig
from .delegation import StepExecution, StepOutcome, delegate_step
from .diffs import ChangeSet, Snapshot, apply_unified_diff, unified_diff
from .planning import Plan, PlanStep, StepStatus, make_plan, translate_intent
from .review import ReviewSuggestion, Severity, apply_suggestions, review_changes
from .run import (
    EXIT_DONE,
    EXIT_FAILED,
    EXIT_PAUSED,
    RunResult,
    TestReport,
    attribute_failure,
    integrate,
    plan_task,
    run_task,
    run_validation,
)
from .states import State, StateMachine, is_valid_state_path, validate_state_path
from .transcript import (
    EventKind,
    Totals,
    Transcript,
    TranscriptEvent,
    audit_locks,
    format_report,
    read_transcript,
    recompute_totals,
    token_ratio,
)

__all__ = [
    "EXIT_DONE", "EXIT_FAILED", "EXIT_PAUSED", "ChangeSet", "EventKind", "Plan", "PlanStep",
    "ReviewSuggestion", "RunConfig", "RunResult", "Severity", "Snapshot", "State",
    "StateMachine", "StepExecution", "StepOutcome", "StepStatus", "TestReport", "Totals",
    "Transcript", "TranscriptEvent", "apply_suggestions", "apply_unified_diff",
    "attribute_failure", "audit_locks", "delegate_step", "format_report", "integrate", "is_valid_state_path",
    "make_plan", "plan_task", "read_transcript", "recompute_totals", "review_changes",
    "run_task", "run_validation", "token_ratio", "translate_intent", "unified_diff",
    "validate_state_path",
]
