"""Orchestration states and the transition relation a run must follow.

    Plan -> RetrieveContext -> Delegate -> Edit -> Test
    Test -> Review | Delegate (failures, retries left) | Failed
    Review -> IntegratePR | Edit (review changes applied)
    Edit (after Review) -> IntegratePR
    IntegratePR -> Done

Any non-terminal state may also fall through to Failed on an error. A run
that pauses for human confirmation stops in Review.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence

from ..errors import InvalidTransition


class State(str, enum.Enum):
    PLAN = "Plan"
    RETRIEVE_CONTEXT = "RetrieveContext"
    DELEGATE = "Delegate"
    EDIT = "Edit"
    TEST = "Test"
    REVIEW = "Review"
    INTEGRATE_PR = "IntegratePR"
    DONE = "Done"
    FAILED = "Failed"


TERMINAL = frozenset({State.DONE, State.FAILED})

# Edit is split by how it was entered: from Delegate it leads to Test, from
# Review straight to IntegratePR.
_EDIT_AFTER_REVIEW = "Edit<-Review"

_NEXT: dict[object, frozenset] = {
    State.PLAN: frozenset({State.RETRIEVE_CONTEXT}),
    State.RETRIEVE_CONTEXT: frozenset({State.DELEGATE}),
    State.DELEGATE: frozenset({State.EDIT}),
    State.EDIT: frozenset({State.TEST}),
    _EDIT_AFTER_REVIEW: frozenset({State.INTEGRATE_PR}),
    State.TEST: frozenset({State.REVIEW, State.DELEGATE, State.FAILED}),
    State.REVIEW: frozenset({State.INTEGRATE_PR, State.EDIT}),
    State.INTEGRATE_PR: frozenset({State.DONE}),
    State.DONE: frozenset(),
    State.FAILED: frozenset(),
}


class StateMachine:
    """Tracks the current state and rejects transitions outside the relation."""

    def __init__(self) -> None:
        self.path: list[State] = []
        self._node: object | None = None

    @property
    def current(self) -> State | None:
        return self.path[-1] if self.path else None

    def allowed(self, nxt: State) -> bool:
        if self._node is None:
            return nxt is State.PLAN
        if nxt is State.FAILED and self._node not in TERMINAL:
            return True
        return nxt in _NEXT[self._node]

    def enter(self, nxt: State) -> None:
        nxt = State(nxt)
        if not self.allowed(nxt):
            raise InvalidTransition(f"{self.current.value if self.current else 'start'} -> {nxt.value}")
        if nxt is State.EDIT and self._node is State.REVIEW:
            self._node = _EDIT_AFTER_REVIEW
        else:
            self._node = nxt
        self.path.append(nxt)


def validate_state_path(path: Sequence[State | str], complete: bool = True) -> None:
    """Raise InvalidTransition unless ``path`` is a word of the transition relation.

    With ``complete`` the path must also end in Done, Failed, or Review
    (paused awaiting confirmation).
    """
    machine = StateMachine()
    for state in path:
        machine.enter(State(state))
    if complete and machine.current not in (State.DONE, State.FAILED, State.REVIEW):
        last = machine.current.value if machine.current else "nothing"
        raise InvalidTransition(f"run ended in {last}, not a terminal or paused state")


def is_valid_state_path(path: Sequence[State | str], complete: bool = True) -> bool:
    try:
        validate_state_path(path, complete)
    except (InvalidTransition, ValueError):
        return False
    return True
