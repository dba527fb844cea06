import random

import pytest
from hypothesis import given, settings, strategies as st

from ctxcode.errors import PatchApplyError
from ctxcode.orchestrator.diffs import ChangeSet, Snapshot, apply_unified_diff, touched_files, unified_diff
from oracles import git_apply, materialize, random_edit_scenario

PLANTED_DIFF = (
    "diff --git a/a.txt b/a.txt\n--- a/a.txt\n+++ b/a.txt\n@@ -1,3 +1,3 @@\n one\n-two\n-three\n"
    "+TWO\n+three\n\\ No newline at end of file\n"
    "diff --git a/gone b/gone\ndeleted file mode 100644\n--- a/gone\n+++ /dev/null\n@@ -1 +0,0 @@\n-x\n"
    "diff --git a/new.txt b/new.txt\nnew file mode 100644\n--- /dev/null\n+++ b/new.txt\n@@ -0,0 +1 @@\n+hi\n"
)


def test_planted_diff_text():
    before = {"a.txt": b"one\ntwo\nthree\n", "gone": b"x\n"}
    after = {"a.txt": b"one\nTWO\nthree", "new.txt": b"hi\n"}
    assert unified_diff(before, after) == PLANTED_DIFF
    assert touched_files(before, after) == ["a.txt", "gone", "new.txt"]
    assert apply_unified_diff(before, PLANTED_DIFF) == after


def test_no_change_is_empty():
    files = {"a": b"x\n"}
    assert unified_diff(files, files) == ""
    assert ChangeSet.between(Snapshot(files), Snapshot(files)).files_touched == ()


def test_empty_file_create_and_delete():
    assert apply_unified_diff({}, unified_diff({}, {"e": b""})) == {"e": b""}
    assert apply_unified_diff({"e": b""}, unified_diff({"e": b""}, {})) == {}


def test_stale_patch_rejected():
    diff = unified_diff({"a": b"1\n2\n"}, {"a": b"1\n3\n"})
    with pytest.raises(PatchApplyError):
        apply_unified_diff({"a": b"1\nX\n"}, diff)
    with pytest.raises(PatchApplyError):
        apply_unified_diff({}, diff)


def test_snapshot_capture_restore(tmp_path):
    materialize(tmp_path, {"a.txt": b"a\n", "d/b.txt": b"b\n", ".git/HEAD": b"ref\n"})
    snap = Snapshot.capture(tmp_path)
    assert sorted(snap.files) == ["a.txt", "d/b.txt"]
    (tmp_path / "a.txt").write_bytes(b"changed")
    materialize(tmp_path, {"new/deep/c.txt": b"c"})
    snap.restore(tmp_path)
    assert Snapshot.capture(tmp_path).files == snap.files
    assert not (tmp_path / "new").exists()
    assert (tmp_path / ".git" / "HEAD").read_bytes() == b"ref\n"


@pytest.mark.parametrize("seed", range(25))
def test_replay_matches_git_apply(tmp_path, seed):
    before, after = random_edit_scenario(random.Random(seed))
    cs = ChangeSet.between(Snapshot(before), Snapshot(after))
    assert cs.replays(Snapshot(before), Snapshot(after))
    materialize(tmp_path, before)
    assert git_apply(tmp_path, cs.unified_diff) == after


lines = st.lists(st.sampled_from(["a", "b", "c", "", " x", "ü"]), max_size=12)
texts = st.tuples(lines, st.booleans()).map(lambda t: ("\n".join(t[0]) + ("\n" if t[1] and t[0] else "")).encode())
workspaces = st.dictionaries(st.sampled_from(["a", "b", "d/c", "d/e/f"]), texts, max_size=4)


@settings(max_examples=300, deadline=None)
@given(workspaces, workspaces)
def test_replay_property(before, after):
    assert apply_unified_diff(before, unified_diff(before, after)) == after
