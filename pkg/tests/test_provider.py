import json

import pytest
from hypothesis import given, strategies as st

from ctxcode.errors import FixtureFormatError, NoFixtureMatch
from ctxcode.orchestrator import RunConfig, run_task
from ctxcode.provider import (Done, FixtureEntry, Message, ProviderRequest, ProviderResponse,
                              RecordingProvider, ReplayProvider, ScriptedProvider, ToolInvocation,
                              Usage, action_from_dict, action_to_dict, dump_fixture, estimate_usage,
                              load_fixture)


def entry(agent, contains="", *actions, usage=None):
    return FixtureEntry(agent, tuple(actions) or (Message("ok"),), contains, usage=usage)


def test_scripted_passthrough_and_cursor():
    p = ScriptedProvider([entry("planner", "", Message("plan"), usage=Usage(7, 3))])
    resp = p.complete(ProviderRequest("planner", "make a plan"))
    assert resp.actions == (Message("plan"),) and resp.usage == Usage(7, 3)
    assert p.remaining == 0
    with pytest.raises(NoFixtureMatch):
        p.complete(ProviderRequest("planner", "make a plan"))


def test_unmatched_agent_names_agent_and_digest():
    req = ProviderRequest("ghost", "hello")
    with pytest.raises(NoFixtureMatch) as info:
        ScriptedProvider([entry("planner")]).complete(req)
    assert "ghost" in str(info.value) and req.digest in str(info.value)


def test_entries_consumed_in_order_for_same_matcher():
    p = ScriptedProvider([entry("a", "", Message("1")), entry("a", "", Message("2"))])
    got = [p.complete(ProviderRequest("a", "x")).last_message() for _ in range(2)]
    assert got == ["1", "2"]


def test_substring_matching():
    p = ScriptedProvider([entry("a", "step 2", Message("two")), entry("a", "step 1", Message("one"))])
    assert p.complete(ProviderRequest("a", "do step 1")).last_message() == "one"


def test_estimated_usage():
    req = ProviderRequest("a", "x" * 40)
    resp = ScriptedProvider([entry("a")]).complete(req)
    assert resp.usage == estimate_usage(req, (Message("ok"),))
    assert resp.usage.input_tokens == 10


def test_request_and_response_invariants():
    with pytest.raises(ValueError):
        ProviderRequest("a", "")
    with pytest.raises(ValueError):
        ProviderResponse(())
    with pytest.raises(ValueError):
        Usage(-1, 0)
    with pytest.raises(ValueError):
        Done("maybe")


actions = st.one_of(
    st.builds(ToolInvocation, st.sampled_from(["Read", "Write"]),
              st.dictionaries(st.sampled_from(["path", "content"]), st.text(max_size=10))),
    st.builds(Message, st.text(max_size=20)),
    st.builds(Done, st.sampled_from(["complete", "blocked"]), st.text(max_size=10)),
)


@given(actions)
def test_action_round_trip(action):
    assert action_from_dict(json.loads(json.dumps(action_to_dict(action)))) == action


def test_fixture_file_round_trip(tmp_path):
    entries = [entry("a", "x", Message("m"), usage=Usage(1, 2)),
               FixtureEntry("b", (Done(),), prompt_digest="ab" * 32)]
    dump_fixture(entries, tmp_path / "f.jsonl")
    assert load_fixture(tmp_path / "f.jsonl") == entries


@pytest.mark.parametrize("line", [
    '{"match": {}, "response": {"actions": []}}',
    '{"match": {"agent": "a"}, "response": {"actions": []}}',
    '{"match": {"agent": "a"}, "response": {"actions": [{"type": "dance"}]}}',
    'not json',
])
def test_bad_fixture_lines(tmp_path, line):
    (tmp_path / "f.jsonl").write_text("# comment\n" + line + "\n")
    with pytest.raises(FixtureFormatError) as info:
        load_fixture(tmp_path / "f.jsonl")
    assert ":2:" in str(info.value)


def test_replay_requires_digests():
    with pytest.raises(FixtureFormatError):
        ReplayProvider([entry("a")])


def test_record_then_replay_identical_transcripts(customblock, tmp_path):
    import shutil
    pristine = tmp_path / "pristine"
    shutil.copytree(customblock.repo, pristine)
    config = RunConfig.load(customblock.config_path)
    recorder = RecordingProvider(ScriptedProvider.from_file(customblock.fixture_path))
    first = run_task(customblock.request, customblock.repo, config, recorder)
    recorder.save(tmp_path / "rec.jsonl")
    shutil.rmtree(customblock.repo)
    shutil.copytree(pristine, customblock.repo)
    replay = ReplayProvider(load_fixture(tmp_path / "rec.jsonl"))
    second = run_task(customblock.request, customblock.repo, config, replay)
    assert second.transcript.dumps(with_time=False) == first.transcript.dumps(with_time=False)
    assert replay.remaining == 0
