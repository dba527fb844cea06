"""Command-line interface: index, run, plan, replay and report.

Exit codes: 0 success, 1 other errors, 2 run failure, 3 paused awaiting
confirmation (or declined), 64 usage errors.

Environment overrides: ``CTXCODE_CONFIG`` (run-config path) and
``CTXCODE_PROVIDER`` (provider spec such as ``scripted:fixture.jsonl``); an
explicit flag always wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import TextIO

from .context import TaskSpec
from .errors import CtxError, MalformedTranscript
from .orchestrator.config import RunConfig
from .orchestrator.review import ReviewSuggestion
from .orchestrator.run import EXIT_FAILED, RunResult, plan_task, run_task
from .orchestrator.transcript import Transcript, format_report, read_transcript
from .provider import Provider, RecordingProvider, ReplayProvider, ScriptedProvider, load_fixture
from .retrieval.embedding import NGramEmbedder
from .retrieval.index import FileIndex, MemoryIndex
from .retrieval.search import index_repository

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 64
CONFIG_ENV = "CTXCODE_CONFIG"
PROVIDER_ENV = "CTXCODE_PROVIDER"
LOCK_NAME = ".ctxcode.lock"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- shared helpers -----------------------------------------------------------------


def make_provider(spec: str | None) -> Provider:
    """Provider from ``scripted:PATH`` or ``replay:PATH``."""
    if not spec:
        raise UsageError(f"no provider given (use --provider or set {PROVIDER_ENV})")
    kind, _, path = spec.partition(":")
    if not path:
        raise UsageError(f"provider spec {spec!r} must look like scripted:PATH or replay:PATH")
    if kind == "scripted":
        return ScriptedProvider.from_file(path)
    if kind == "replay":
        return ReplayProvider(load_fixture(path))
    raise UsageError(f"unknown provider kind {kind!r} (expected scripted or replay)")


def load_config(path: str | None) -> RunConfig:
    path = path or os.environ.get(CONFIG_ENV)
    return RunConfig.load(path) if path else RunConfig()


def load_request(args: argparse.Namespace) -> tuple[str, TaskSpec | None]:
    if getattr(args, "spec", None):
        spec = TaskSpec.from_dict(json.loads(Path(args.spec).read_text(encoding="utf-8")))
        return args.task or spec.title, spec
    if not args.task:
        raise UsageError("one of --task or --spec is required")
    return args.task, None


def require_repo(path: str) -> Path:
    repo = Path(path)
    if not repo.is_dir():
        raise UsageError(f"repository {path} does not exist")
    return repo


class OutputDir:
    """Exclusive use of an output directory for one invocation."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.lock = self.path / LOCK_NAME

    def __enter__(self) -> "OutputDir":
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CtxError(f"output directory {self.path} is in use ({self.lock} exists)") from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        return self

    def __exit__(self, *exc) -> None:
        self.lock.unlink(missing_ok=True)


def terminal_confirm(stdin: TextIO, stdout: TextIO):
    def confirm(blocking: Sequence[ReviewSuggestion]) -> bool:
        stdout.write("The reviewer raised blocking issues:\n")
        for s in blocking:
            stdout.write(f"  - {s.path}: {s.suggestion}\n")
        stdout.write("Integrate anyway? [yes/no] ")
        stdout.flush()
        answer = stdin.readline().strip().lower()
        return answer in ("y", "yes")

    return confirm


def write_outputs(out: Path, result: RunResult) -> None:
    cs = result.change_set
    diff = cs.unified_diff if cs is not None else ""
    (out / "diff.patch").write_text(diff, encoding="utf-8", errors="surrogateescape")
    result.transcript.write(out / "transcript.log")
    lines = [f"status: {result.status}", f"final_state: {result.final_state.value}",
             f"run_id: {result.transcript.run_id}"]
    if result.error:
        lines.append(f"error: {result.error_type}: {result.error} (event seq {result.failed_at_seq})")
    summary = "\n".join(lines) + "\n"
    if cs is not None and cs.summary:
        summary += "\n" + cs.summary
    (out / "summary.txt").write_text(summary, encoding="utf-8")


# -- commands -------------------------------------------------------------------------


def cmd_index(args: argparse.Namespace) -> int:
    repo = require_repo(args.repo)
    embedder = NGramEmbedder()
    if args.backend == "file":
        if not args.out:
            raise UsageError("--out is required with --backend file")
        backend = FileIndex(args.out, embedder.dims, embedder.id)
    else:
        backend = MemoryIndex(embedder.dims, embedder.id)
    stats = index_repository(repo, backend, embedder, exclude=args.exclude)
    print(stats)
    return EXIT_OK


def _run(args: argparse.Namespace, provider: Provider, stdin: TextIO) -> int:
    repo = require_repo(args.repo)
    request, spec = load_request(args)
    config = load_config(args.config)
    if args.test_command is not None:
        config = config.replace(test_command=args.test_command)
    recorder = RecordingProvider(provider) if getattr(args, "record", None) else None
    with OutputDir(args.out) as out:
        result = run_task(request, repo, config, recorder or provider, spec=spec,
                          confirm=terminal_confirm(stdin, sys.stdout))
        write_outputs(out.path, result)
    if recorder is not None:
        recorder.save(args.record)
    print(f"{result.final_state.value}: {result.status}")
    if result.error:
        print(f"{result.error_type}: {result.error} (event seq {result.failed_at_seq})", file=sys.stderr)
    return result.exit_code


def cmd_run(args: argparse.Namespace, stdin: TextIO | None = None) -> int:
    require_repo(args.repo)
    return _run(args, make_provider(args.provider or os.environ.get(PROVIDER_ENV)), stdin or sys.stdin)


def cmd_replay(args: argparse.Namespace, stdin: TextIO | None = None) -> int:
    """Re-run against a recorded fixture; with --compare, check the transcript matches."""
    provider = ReplayProvider(load_fixture(args.fixture))
    code = _run(args, provider, stdin or sys.stdin)
    if args.compare:
        expected = read_transcript(args.compare).lines(with_time=False)
        actual = read_transcript(Path(args.out) / "transcript.log").lines(with_time=False)
        if expected != actual:
            for n, (a, b) in enumerate(zip(expected, actual), 1):
                if a != b:
                    print(f"transcript differs at line {n}", file=sys.stderr)
                    break
            else:
                print("transcript differs in length", file=sys.stderr)
            return EXIT_ERROR
        print("transcript matches")
    return code


def cmd_plan(args: argparse.Namespace) -> int:
    repo = require_repo(args.repo)
    request, spec = load_request(args)
    provider = make_provider(args.provider or os.environ.get(PROVIDER_ENV))
    result = plan_task(request, repo, load_config(args.config), provider, spec=spec)
    if result.error:
        print(f"{result.error_type}: {result.error}", file=sys.stderr)
        return EXIT_FAILED
    plan = result.plan
    print(f"{len(plan)} steps")
    print(plan.render())
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    transcript: Transcript = read_transcript(args.transcript)
    baseline = read_transcript(args.baseline) if args.baseline else None
    sys.stdout.write(format_report(transcript, baseline))
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", help="free-form task request")
    p.add_argument("--spec", help="JSON task specification (skips intent translation)")
    p.add_argument("--repo", required=True, help="repository workspace root")
    p.add_argument("--config", help=f"run-config TOML file (env {CONFIG_ENV})")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--test-command", help="override the configured test command")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctxcode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="index a repository and print stats")
    p.add_argument("--repo", required=True)
    p.add_argument("--backend", choices=("memory", "file"), default="memory")
    p.add_argument("--out", help="index directory for the file backend")
    p.add_argument("--exclude", action="append", default=[], help="path prefix to skip")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("run", help="run a task end to end")
    _add_run_flags(p)
    p.add_argument("--provider", help=f"scripted:PATH or replay:PATH (env {PROVIDER_ENV})")
    p.add_argument("--record", metavar="PATH", help="record provider traffic as a replay fixture")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plan", help="dry run: print the role-assigned plan")
    p.add_argument("--task")
    p.add_argument("--spec")
    p.add_argument("--repo", required=True)
    p.add_argument("--config")
    p.add_argument("--provider")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("replay", help="re-run a task against a recorded fixture")
    _add_run_flags(p)
    p.add_argument("--fixture", required=True, help="fixture written by run --record")
    p.add_argument("--compare", metavar="TRANSCRIPT", help="expected transcript (wall_time ignored)")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="token and message metrics for a transcript")
    p.add_argument("transcript")
    p.add_argument("baseline", nargs="?", help="baseline transcript for a token ratio")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except MalformedTranscript as err:
        print(f"MalformedTranscript: {err}", file=sys.stderr)
        return EXIT_ERROR
    except (CtxError, OSError, ValueError) as err:
        print(f"{type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
