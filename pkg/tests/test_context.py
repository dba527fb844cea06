import pytest
from hypothesis import given, settings, strategies as st

from ctxcode.context import (LAYER_IDS, BudgetTooSmall, ContextEntry, ContextStack, ProjectMemory,
                             SubtaskSpec, TaskSpec, add_entry, assemble_prompt, banner,
                             estimate_tokens, minimal_budget, new_stack, surviving_entries)
from ctxcode.errors import SpecValidationFailed


def spec(n=4):
    return TaskSpec("Add a block", "Authors can add a custom block",
                    [SubtaskSpec(i, f"subtask number {i}") for i in range(1, n + 1)],
                    search_terms=["block"])


def test_new_stack_layers():
    stack = new_stack(spec(), ProjectMemory())
    assert stack["L1"] and all(not stack[l] for l in ("L2", "L3", "L4", "L5"))


def test_memory_goes_to_l3():
    stack = new_stack(spec(), ProjectMemory(content="style: no default exports"))
    assert [(e.source_tag, e.content) for e in stack["L3"]] == [("project-memory", "style: no default exports")]


def test_render_lists_steps_in_order():
    text = spec().render()
    positions = [text.index(f"{i}. subtask number {i}") for i in range(1, 5)]
    assert positions == sorted(positions)


@pytest.mark.parametrize("data,missing", [
    ({"title": "t", "clarified_goal": "g", "subtasks": []}, "subtask"),
    ({"title": "t", "clarified_goal": "g",
      "subtasks": [{"id": 1, "description": "a"}, {"id": 1, "description": "b"}]}, "duplicate id 1"),
    ({"title": "t", "clarified_goal": "g",
      "subtasks": [{"id": 1, "description": "a", "depends_on": [2]}, {"id": 2, "description": "b"}]},
     "earlier"),
    ({"clarified_goal": "g", "subtasks": []}, "title"),
])
def test_spec_validation(data, missing):
    with pytest.raises(SpecValidationFailed) as info:
        TaskSpec.from_dict(data)
    assert missing in str(info.value)


def test_spec_dict_round_trip():
    s = spec()
    assert TaskSpec.from_dict(s.to_dict()) == s


def test_add_entry_order():
    stack = new_stack(spec())
    entries = [ContextEntry(f"t{i}", f"content {i}") for i in range(5)]
    for e in entries:
        add_entry(stack, "L5", e)
    assert stack["L5"] == entries
    with pytest.raises(ValueError):
        add_entry(stack, "L6", entries[0])


def test_exactly_five_layers():
    assert tuple(ContextStack().layers) == LAYER_IDS
    with pytest.raises(ValueError):
        ContextStack({"L1": []})


@pytest.mark.parametrize("text,tokens", [("", 0), ("abcd", 1), ("abcde", 2), ("é", 1)])
def test_estimate_tokens(text, tokens):
    assert estimate_tokens(text) == tokens


@given(st.text(), st.text())
def test_estimate_subadditive(a, b):
    assert estimate_tokens(a + b) <= estimate_tokens(a) + estimate_tokens(b) + 1
    assert estimate_tokens(a + b) >= estimate_tokens(a)


def full_stack():
    stack = new_stack(spec(), ProjectMemory(content="memory text"))
    stack.add("L2", ContextEntry("doc", "knowledge " * 10))
    stack.add("L4", ContextEntry("snip", "code " * 10))
    stack.add("L5", ContextEntry("log", "output " * 10))
    return stack


def test_huge_budget_keeps_everything_in_order():
    out = assemble_prompt(full_stack(), "ROLE", 10_000)
    idx = [out.index(banner(l)) for l in LAYER_IDS]
    assert idx == sorted(idx)
    assert "elided" not in out and out.startswith("ROLE")


def test_minimal_budget_keeps_only_l1():
    stack = full_stack()
    b = minimal_budget(stack, "ROLE")
    out = assemble_prompt(stack, "ROLE", b)
    assert spec().render() in out
    assert out.count("[1 entries elided]") == 4
    with pytest.raises(BudgetTooSmall):
        assemble_prompt(stack, "ROLE", b - 1)


def test_highest_priority_snippets_survive():
    stack = new_stack(spec())
    prios = [3, 7, 1, 7, 5, 0, 9, 2, 5, 4]
    for i, p in enumerate(prios):
        stack.add("L4", ContextEntry(f"s{i}", f"snippet body {i:02d} " * 8, priority=p))
    with_all = estimate_tokens(assemble_prompt(stack, "ROLE", 100_000))
    per_entry = stack["L4"][0].token_estimate
    # room for 6 entries plus the elision marker
    budget = with_all - 4 * per_entry
    kept = [i for lid, i in surviving_entries(stack, "ROLE", budget) if lid == "L4"]
    oracle = sorted(range(10), key=lambda i: (-prios[i], i))[:6]
    assert sorted(kept) == sorted(oracle)


def test_truncation_drops_l5_before_l4():
    stack = full_stack()
    b = estimate_tokens(assemble_prompt(stack, "ROLE", 10_000)) - 1
    kept = surviving_entries(stack, "ROLE", b)
    assert ("L5", 0) not in kept and ("L4", 0) in kept


entry = st.builds(ContextEntry, st.text(alphabet="abcxyz", min_size=1, max_size=6),
                  st.text(max_size=120), st.integers(0, 5))


@st.composite
def stacks(draw):
    stack = new_stack(spec(draw(st.integers(1, 3))))
    for lid in LAYER_IDS[1:]:
        for e in draw(st.lists(entry, max_size=4)):
            stack.add(lid, e)
    return stack


@settings(max_examples=150, deadline=None)
@given(stacks(), st.integers(0, 400), st.integers(0, 400))
def test_assembly_properties(stack, extra, more):
    role = "You are a test agent."
    floor = minimal_budget(stack, role)
    budget = floor + extra
    out = assemble_prompt(stack, role, budget)
    assert estimate_tokens(out) <= budget
    assert stack["L1"][0].content in out
    idx = [out.index(banner(l)) for l in LAYER_IDS]
    assert idx == sorted(idx)
    small = set(surviving_entries(stack, role, budget))
    large = set(surviving_entries(stack, role, budget + more))
    assert small <= large
