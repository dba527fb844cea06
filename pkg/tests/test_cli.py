import io
import json
import shutil
import subprocess
import sys

import pytest

from ctxcode import cli
from ctxcode.orchestrator.diffs import Snapshot
from ctxcode.orchestrator.transcript import read_transcript
from ctxcode.provider import dump_fixture
from ctxcode.synthetic import random_scenario, write_workspace
from oracles import independent_totals


def cb_args(staged, out, *extra):
    return ["run", "--task", staged.request, "--repo", str(staged.repo), "--config", str(staged.config_path),
            "--provider", f"scripted:{staged.fixture_path}", "--out", str(out), *extra]


def synthetic_cli(tmp_path, pred):
    for seed in range(5000):
        sc = random_scenario(seed)
        if pred(sc):
            break
    repo = write_workspace(tmp_path / "repo", sc.with_reviewer)
    dump_fixture(sc.entries, tmp_path / "fx.jsonl")
    (tmp_path / "spec.json").write_text(json.dumps(sc.spec.to_dict()))
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'max_test_retries = {sc.config.max_test_retries}\n'
                   f'auto_apply_max_severity = "{sc.config.auto_apply_max_severity}"\n')
    argv = ["run", "--spec", str(tmp_path / "spec.json"), "--repo", str(repo), "--config", str(cfg),
            "--provider", f"scripted:{tmp_path / 'fx.jsonl'}", "--out", str(tmp_path / "out")]
    return sc, repo, argv


def test_run_customblock(customblock, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(cb_args(customblock, out)) == 0
    assert capsys.readouterr().out.strip().endswith("Done: done")
    assert sorted(p.name for p in out.iterdir()) == ["diff.patch", "summary.txt", "transcript.log"]
    assert (out / "summary.txt").read_text().startswith("status: done\nfinal_state: Done\n")
    assert "+++ b/src/blocks/CustomBlock.jsx" in (out / "diff.patch").read_text()
    t = read_transcript(out / "transcript.log")
    assert independent_totals(out / "transcript.log") == (t.totals.messages, t.totals.input_tokens,
                                                         t.totals.output_tokens)


def test_plan_prints_four_steps(customblock, capsys):
    argv = ["plan", "--task", customblock.request, "--repo", str(customblock.repo), "--config",
            str(customblock.config_path), "--provider", f"scripted:{customblock.fixture_path}"]
    assert cli.main(argv) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "4 steps"
    assert sum(1 for line in out if "frontend-specialist" in line) == 2


def test_report_and_ratio(customblock, tmp_path, capsys):
    cli.main(cb_args(customblock, tmp_path / "out"))
    log = tmp_path / "out" / "transcript.log"
    capsys.readouterr()
    assert cli.main(["report", str(log)]) == 0
    text = capsys.readouterr().out
    m, i, o = independent_totals(log)
    assert f"messages: {m}\n" in text and f"total_tokens: {i + o}\n" in text
    assert cli.main(["report", str(log), str(log)]) == 0
    assert "token_ratio: 1.00x" in capsys.readouterr().out


def test_report_malformed(tmp_path, capsys):
    bad = tmp_path / "t.log"
    bad.write_text('{"format": "ctxcode-transcript/1", "run_id": "x"}\n{oops\n')
    assert cli.main(["report", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_record_then_replay_compare(tmp_path, capsys):
    from ctxcode.synthetic import stage_scenario
    from conftest import CUSTOMBLOCK

    first = stage_scenario(CUSTOMBLOCK, tmp_path / "a")
    fx = tmp_path / "rec.jsonl"
    assert cli.main(cb_args(first, tmp_path / "o1", "--record", str(fx))) == 0
    second = stage_scenario(CUSTOMBLOCK, tmp_path / "b")
    argv = ["replay", "--task", second.request, "--repo", str(second.repo), "--config",
            str(second.config_path), "--fixture", str(fx), "--out", str(tmp_path / "o2"),
            "--compare", str(tmp_path / "o1" / "transcript.log")]
    assert cli.main(argv) == 0
    assert "transcript matches" in capsys.readouterr().out
    # a different run against the same recording diverges
    third = stage_scenario(CUSTOMBLOCK, tmp_path / "c")
    (third.repo / "PROJECT.md").write_text("changed memory\n")
    argv[argv.index("--repo") + 1] = str(third.repo)
    argv[argv.index("--out") + 1] = str(tmp_path / "o3")
    assert cli.main(argv) != 0


def test_blocking_no_restores_workspace(tmp_path, monkeypatch, capsys):
    sc, repo, argv = synthetic_cli(
        tmp_path, lambda s: s.with_reviewer and s.blocked_step is None and "blocking" in s.severities)
    monkeypatch.setattr(sys, "stdin", io.StringIO("no\n"))
    assert cli.main(argv) == 3
    out = capsys.readouterr().out
    assert "Integrate anyway? [yes/no]" in out and out.strip().endswith("Review: paused")
    assert (repo / "src/app.py").read_text().count("# todo") == 3
    assert (tmp_path / "out" / "summary.txt").read_text().startswith("status: paused")


def test_blocking_yes_integrates(tmp_path, monkeypatch):
    _, _, argv = synthetic_cli(
        tmp_path, lambda s: s.with_reviewer and s.blocked_step is None and "blocking" in s.severities)
    monkeypatch.setattr(sys, "stdin", io.StringIO("yes\n"))
    assert cli.main(argv) == 0


def test_failed_run_exit_2(tmp_path, capsys):
    _, _, argv = synthetic_cli(tmp_path, lambda s: s.blocked_step is not None)
    assert cli.main(argv) == 2
    assert "StepBlocked" in capsys.readouterr().err
    assert "error: StepBlocked" in (tmp_path / "out" / "summary.txt").read_text()


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["run", "--repo", "."],
    ["run", "--task", "x", "--repo", "/no/such/dir", "--provider", "scripted:x"],
    ["run", "--task", "x", "--repo", ".", "--provider", "magic:x"],
    ["run", "--task", "x", "--repo", "."],
    ["index", "--repo", ".", "--backend", "file"],
])
def test_usage_errors(argv, capsys, monkeypatch):
    monkeypatch.delenv(cli.PROVIDER_ENV, raising=False)
    assert cli.main(argv) == 64


def test_output_dir_lock(customblock, tmp_path, capsys):
    pre = Snapshot.capture(customblock.repo)
    out = tmp_path / "out"
    out.mkdir()
    (out / cli.LOCK_NAME).write_text("123\n")
    assert cli.main(cb_args(customblock, out)) == 1
    assert "in use" in capsys.readouterr().err
    assert Snapshot.capture(customblock.repo).files == pre.files
    assert (out / cli.LOCK_NAME).read_text() == "123\n"
    assert not (out / "transcript.log").exists()


def test_provider_from_env(customblock, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.PROVIDER_ENV, f"scripted:{customblock.fixture_path}")
    monkeypatch.setenv(cli.CONFIG_ENV, str(customblock.config_path))
    argv = ["run", "--task", customblock.request, "--repo", str(customblock.repo), "--out", str(tmp_path / "o")]
    assert cli.main(argv) == 0


def test_index_command(customblock, tmp_path, capsys):
    assert cli.main(["index", "--repo", str(customblock.repo)]) == 0
    mem = capsys.readouterr().out
    assert cli.main(["index", "--repo", str(customblock.repo), "--backend", "file", "--out", str(tmp_path / "ix")]) == 0
    assert capsys.readouterr().out == mem
    assert (tmp_path / "ix").is_dir()


def test_console_entry_point_piped_no(tmp_path):
    _, repo, argv = synthetic_cli(
        tmp_path, lambda s: s.with_reviewer and s.blocked_step is None and "blocking" in s.severities)
    before = (repo / "src/app.py").read_bytes()
    proc = subprocess.run([sys.executable, "-m", "ctxcode.cli", *argv], input="no\n", text=True,
                          capture_output=True, timeout=60)
    assert proc.returncode == 3, proc.stderr
    assert (repo / "src/app.py").read_bytes() == before
