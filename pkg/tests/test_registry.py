import pytest
from hypothesis import given, strategies as st

from ctxcode.errors import (DuplicateAgentName, EmptyPrompt, MissingField, ProfileNotFound,
                            UnknownHeaderKey, UnknownTool)
from ctxcode.registry import (ModelTier, Registry, get_profile, load_registry, parse_agent_file,
                              serialize_profile)
from ctxcode.tools import TOOL_NAMES

BACKEND = """name: backend-architect
description: Designs server-side modules and data flow.
model: sonnet
tools: Read, Write, Edit, Bash

You are a senior backend architect. Keep interfaces small and
explain trade-offs before changing storage code.
"""


def profile_text(name, tools="Read", body="Do the work."):
    return f"name: {name}\ndescription: {name} role\ntools: {tools}\n\n{body}\n"


def test_parse_backend_profile():
    p = parse_agent_file(BACKEND)
    assert p.name == "backend-architect"
    assert p.tools == ("Read", "Write", "Edit", "Bash")
    assert p.model_tier is ModelTier.BALANCED
    assert p.system_prompt.startswith("You are a senior backend architect")


def test_crlf_accepted():
    assert parse_agent_file(BACKEND.replace("\n", "\r\n")) == parse_agent_file(BACKEND)


def test_header_without_blank_line_is_empty_prompt():
    with pytest.raises(EmptyPrompt):
        parse_agent_file("name: a\ndescription: d\ntools: Read\nYou are a.")


def test_duplicate_tools_collapse():
    p = parse_agent_file(profile_text("a", "Read , Read"))
    assert p.tools == ("Read",)


@pytest.mark.parametrize("text,err,line", [
    ("description: d\ntools: Read\n\nbody", MissingField, 0),
    ("name: a\ndescription: d\ntools: Read\ncolor: red\n\nbody", UnknownHeaderKey, 4),
    ("name: a\ndescription: d\ntools: Read, Fly\n\nbody", UnknownTool, 3),
    ("name: a\ndescription: d\ntools: Read\n\n   \n", EmptyPrompt, None),
])
def test_parse_errors_name_the_line(text, err, line):
    with pytest.raises(err) as info:
        parse_agent_file(text)
    if line:
        assert info.value.line == line
        assert f"line {line}" in str(info.value)


def test_model_aliases():
    assert parse_agent_file(BACKEND.replace("sonnet", "haiku")).model_tier is ModelTier.FAST
    assert parse_agent_file(BACKEND.replace("sonnet", "opus")).model_tier is ModelTier.POWERFUL


def test_load_four_profiles(tmp_path):
    for name in ("backend-architect", "frontend-specialist", "devops-engineer", "code-reviewer"):
        (tmp_path / f"{name}.agent").write_text(profile_text(name))
    (tmp_path / "notes.txt").write_text("not a profile")
    reg = load_registry(tmp_path)
    assert len(reg) == 4
    assert reg.names == sorted(reg.names)
    assert get_profile(reg, "code-reviewer").name == "code-reviewer"


def test_empty_dir(tmp_path):
    reg = load_registry(tmp_path)
    assert len(reg) == 0
    with pytest.raises(ProfileNotFound) as info:
        reg.get("planner")
    assert info.value.known == []


def test_duplicate_name_lists_both_files(tmp_path):
    (tmp_path / "a.agent").write_text(profile_text("planner"))
    (tmp_path / "b.agent").write_text(profile_text("planner"))
    with pytest.raises(DuplicateAgentName) as info:
        load_registry(tmp_path)
    assert "a.agent" in str(info.value) and "b.agent" in str(info.value)


def test_parse_error_annotated_with_path(tmp_path):
    (tmp_path / "bad.agent").write_text("name: x\n\nbody")
    with pytest.raises(MissingField) as info:
        load_registry(tmp_path)
    assert "bad.agent" in str(info.value)


def test_names_case_sensitive(tmp_path):
    (tmp_path / "b.agent").write_text(BACKEND)
    reg = load_registry(tmp_path)
    with pytest.raises(ProfileNotFound):
        reg.get("Backend-Architect")


def test_registry_tools_subset_of_sandbox(tmp_path):
    (tmp_path / "b.agent").write_text(BACKEND)
    assert all(set(p.tools) <= set(TOOL_NAMES) for p in load_registry(tmp_path))


def test_load_is_deterministic(tmp_path):
    for n in ("c", "a", "b"):
        (tmp_path / f"{n}.agent").write_text(profile_text(n))
    assert load_registry(tmp_path) == load_registry(tmp_path)
    assert [p.name for p in load_registry(tmp_path)] == ["a", "b", "c"]


names = st.from_regex(r"[a-z0-9][a-z0-9-]{0,15}", fullmatch=True)
line_text = st.text(st.characters(min_codepoint=32, max_codepoint=0x2FF, blacklist_characters="\x7f"),
                    min_size=1, max_size=40).map(str.strip).filter(bool)


@given(names, line_text, st.sampled_from(list(ModelTier)),
       st.lists(st.sampled_from(TOOL_NAMES), min_size=1, unique=True),
       st.lists(line_text, min_size=1, max_size=5))
def test_serialize_round_trip(name, description, tier, tools, body):
    text = profile_text(name, ", ".join(tools), "\n".join(body)).replace(
        "tools:", f"model: {dict(fast='haiku', balanced='sonnet', powerful='opus')[tier.value]}\ntools:")
    p = parse_agent_file(text.replace(f"{name} role", description))
    again = parse_agent_file(serialize_profile(p))
    assert again == p
    assert again.tools == tuple(tools)
