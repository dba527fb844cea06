import pytest
from hypothesis import given, strategies as st

from ctxcode.errors import InvalidTransition
from ctxcode.orchestrator.states import State, StateMachine, is_valid_state_path, validate_state_path

FULL = ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Delegate", "Edit", "Test",
        "Review", "Edit", "IntegratePR", "Done"]


def test_full_path_valid():
    validate_state_path(FULL)


@pytest.mark.parametrize("path", [
    ["Plan", "Failed"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Failed"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Review"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Review", "IntegratePR", "Done"],
])
def test_valid_paths(path):
    assert is_valid_state_path(path)


@pytest.mark.parametrize("path", [
    ["RetrieveContext"],
    ["Plan", "Delegate"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Review"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Review", "Edit", "Test"],
    ["Plan", "RetrieveContext", "Delegate", "Edit", "Test", "Review", "IntegratePR", "Done", "Failed"],
    ["Plan", "RetrieveContext"],
    ["Plan", "Bogus"],
])
def test_invalid_paths(path):
    assert not is_valid_state_path(path)


def test_incomplete_prefix_allowed_when_not_complete():
    assert is_valid_state_path(["Plan", "RetrieveContext"], complete=False)


def test_machine_reports_transition():
    m = StateMachine()
    m.enter(State.PLAN)
    with pytest.raises(InvalidTransition, match="Plan -> Test"):
        m.enter(State.TEST)
    assert m.current is State.PLAN


@given(st.lists(st.sampled_from(list(State)), max_size=14))
def test_prefix_closed(path):
    # every prefix of a valid (possibly incomplete) path is itself valid
    if is_valid_state_path(path, complete=False):
        for n in range(len(path)):
            assert is_valid_state_path(path[:n], complete=False)
