"""Sandboxed tools agents act through: Read, Write, Edit, Grep, Bash, RunTests.

Every path argument is resolved component by component inside the workspace
root; a symlink is followed only after its target has been checked, so no
filesystem access ever happens outside the root. Writes need the caller to
hold the path lock and are atomic (temp file + rename). ``Bash`` is narrowed
to the configured test command plus a few read-only commands whose path
arguments are sandbox-checked.
"""

from __future__ import annotations

import os
import shlex
import signal
import subprocess
import tempfile
from collections import deque
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

from .errors import (
    AmbiguousMatch,
    CommandNotAllowed,
    CommandNotFound,
    CtxError,
    FindNotFound,
    LockNotHeld,
    PathEscapesSandbox,
    PathNotFound,
    PermissionDenied,
    ToolError,
)
from .locks import FileLockTable

if TYPE_CHECKING:
    from .registry import AgentProfile

TOOL_NAMES = ("Read", "Write", "Edit", "Grep", "Bash", "RunTests")
READONLY_COMMANDS = frozenset({"ls", "cat", "head", "tail", "wc", "pwd"})
DEFAULT_TIMEOUT = 300.0
MAX_SYMLINK_HOPS = 40


@dataclass(frozen=True)
class ToolResult:
    ok: bool
    content: str
    exit_code: int | None = None

    def __post_init__(self) -> None:
        if not self.ok and not self.content:
            raise ValueError("a failed ToolResult must carry a diagnostic")


def _inside(root: str, path: str) -> bool:
    return path == root or path.startswith(root.rstrip(os.sep) + os.sep)


class Sandbox:
    def __init__(
        self,
        root: str | os.PathLike,
        locks: FileLockTable | None = None,
        test_command: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        test_runner: Callable[["Sandbox"], ToolResult] | None = None,
        readonly_commands: frozenset[str] = READONLY_COMMANDS,
    ):
        self.root = os.path.realpath(os.fspath(root))
        if not os.path.isdir(self.root):
            raise NotADirectoryError(self.root)
        self.locks = locks if locks is not None else FileLockTable()
        self.test_command = test_command
        self.timeout = timeout
        self.test_runner = test_runner
        self.readonly_commands = readonly_commands

    # -- path handling ----------------------------------------------------------

    def resolve(self, path: str) -> str:
        """Absolute real path for ``path``; raises PathEscapesSandbox."""
        if not isinstance(path, str) or "\x00" in path:
            raise PathEscapesSandbox(f"invalid path argument {path!r}")
        lexical = os.path.normpath(os.path.join(self.root, path))
        if not _inside(self.root, lexical):
            raise PathEscapesSandbox(f"{path!r} resolves outside the workspace")
        pending = deque(os.path.relpath(lexical, self.root).split(os.sep))
        current = self.root
        hops = 0
        while pending:
            part = pending.popleft()
            if part in ("", "."):
                continue
            if part == "..":
                current = os.path.dirname(current)
                if not _inside(self.root, current):
                    raise PathEscapesSandbox(f"{path!r} resolves outside the workspace")
                continue
            candidate = os.path.join(current, part)
            if os.path.islink(candidate):
                hops += 1
                if hops > MAX_SYMLINK_HOPS:
                    raise PathEscapesSandbox(f"too many symbolic links in {path!r}")
                target = os.path.normpath(os.path.join(current, os.readlink(candidate)))
                if not _inside(self.root, target):
                    raise PathEscapesSandbox(f"{path!r} links outside the workspace")
                pending.extendleft(reversed(os.path.relpath(target, self.root).split(os.sep)))
                current = self.root
                continue
            current = candidate
        return current

    def rel(self, path: str) -> str:
        """Workspace-relative posix key for ``path``, as used by the lock table."""
        resolved = self.resolve(path)
        rel = os.path.relpath(resolved, self.root)
        return "." if rel == "." else rel.replace(os.sep, "/")

    # -- file tools ---------------------------------------------------------------

    def read(self, path: str) -> ToolResult:
        target = self.resolve(path)
        if not os.path.isfile(target):
            raise PathNotFound(f"no such file: {path}")
        with open(target, "rb") as fh:
            data = fh.read()
        return ToolResult(True, data.decode("utf-8", "replace"))

    def _check_lock(self, path: str, agent: str) -> str:
        key = self.rel(path)
        if self.locks.holder(key) != agent:
            raise LockNotHeld(f"{agent} must hold the lock on {key} before writing")
        return key

    def _make_parents(self, parent: str) -> None:
        # walk down from the root; os.makedirs would probe upward past it
        current = self.root
        for part in os.path.relpath(parent, self.root).split(os.sep):
            if part in ("", "."):
                continue
            current = os.path.join(current, part)
            try:
                os.mkdir(current)
            except FileExistsError:
                pass

    def _atomic_write(self, target: str, data: bytes) -> None:
        if os.path.isdir(target):
            raise ToolError(f"{os.path.relpath(target, self.root)} is a directory")
        parent = os.path.dirname(target)
        self._make_parents(parent)
        fd, tmp = tempfile.mkstemp(prefix=".ctxcode-", suffix=".tmp", dir=parent)
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def write(self, path: str, content: str, agent: str) -> ToolResult:
        key = self._check_lock(path, agent)
        self._atomic_write(self.resolve(path), content.encode("utf-8", "surrogateescape"))
        return ToolResult(True, f"wrote {key}")

    def edit(
        self,
        path: str,
        find: str,
        replace: str,
        agent: str,
        occurrence: int | str | None = None,
    ) -> ToolResult:
        """Exact-text replacement.

        ``occurrence`` is a 1-based index, ``"all"``, or None (exactly one
        match required, else AmbiguousMatch).
        """
        if not find:
            raise ToolError("find text must be non-empty")
        key = self._check_lock(path, agent)
        target = self.resolve(path)
        if not os.path.isfile(target):
            raise PathNotFound(f"no such file: {path}")
        with open(target, "rb") as fh:
            text = fh.read().decode("utf-8", "surrogateescape")
        count = text.count(find)
        if count == 0:
            raise FindNotFound(f"text to replace not found in {key}")
        if occurrence is None:
            if count > 1:
                raise AmbiguousMatch(f"{count} matches in {key}; specify an occurrence")
            new, replaced = text.replace(find, replace, 1), 1
        elif occurrence == "all":
            new, replaced = text.replace(find, replace), count
        else:
            n = int(occurrence)
            if not 1 <= n <= count:
                raise FindNotFound(f"occurrence {n} requested but {key} has {count} matches")
            pos, start = 0, 0
            for _ in range(n):
                pos = text.index(find, start)
                start = pos + len(find)
            new, replaced = text[:pos] + replace + text[pos + len(find) :], 1
        self._atomic_write(target, new.encode("utf-8", "surrogateescape"))
        return ToolResult(True, f"replaced {replaced} occurrence(s) in {key}")

    def grep(self, pattern: str, glob: str = "*", literal: bool = False) -> ToolResult:
        from .retrieval.lexical import lexical_search

        if os.path.isabs(glob) or ".." in glob.replace("\\", "/").split("/"):
            raise PathEscapesSandbox(f"glob {glob!r} reaches outside the workspace")
        matches = lexical_search(self.root, pattern, glob, literal=literal)
        return ToolResult(True, "\n".join(map(str, matches)))

    # -- commands -------------------------------------------------------------------

    def _exec(self, argv: list[str]) -> ToolResult:
        try:
            proc = subprocess.Popen(
                argv,
                cwd=self.root,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                stdin=subprocess.DEVNULL,
                start_new_session=True,
            )
        except FileNotFoundError:
            raise CommandNotFound(f"command not found: {argv[0]}") from None
        try:
            out, _ = proc.communicate(timeout=self.timeout)
        except subprocess.TimeoutExpired:
            os.killpg(proc.pid, signal.SIGKILL)
            out, _ = proc.communicate()
            partial = out.decode("utf-8", "replace")
            return ToolResult(False, f"Timeout: exceeded {self.timeout:g}s\n{partial}", None)
        text = out.decode("utf-8", "replace")
        if proc.returncode != 0 and not text:
            text = f"exit status {proc.returncode}"
        return ToolResult(proc.returncode == 0, text, proc.returncode)

    def run_tests(self) -> ToolResult:
        if self.test_runner is not None:
            return self.test_runner(self)
        if not self.test_command:
            raise CommandNotFound("no test command configured")
        argv = shlex.split(self.test_command)
        if not argv:
            raise CommandNotFound("test command is empty")
        return self._exec(argv)

    def bash(self, command: str) -> ToolResult:
        try:
            argv = shlex.split(command)
        except ValueError as err:
            raise CommandNotAllowed(f"cannot parse command: {err}") from None
        if not argv:
            raise CommandNotAllowed("empty command")
        if self.test_command and argv == shlex.split(self.test_command):
            return self.run_tests()
        if argv[0] not in self.readonly_commands:
            raise CommandNotAllowed(
                f"{argv[0]!r} is not allowed; permitted: the test command, "
                f"{', '.join(sorted(self.readonly_commands))}"
            )
        for arg in argv[1:]:
            value = arg.split("=", 1)[1] if arg.startswith("-") and "=" in arg else arg
            if value.startswith("-") or not value:
                continue
            self.resolve(value)
        return self._exec(argv)

    # -- dispatch ---------------------------------------------------------------------

    def invoke(self, profile: "AgentProfile", tool: str, args: Mapping[str, Any]) -> ToolResult:
        """Run one agent tool call; tool failures come back as ok=False results.

        PermissionDenied is raised, never returned.
        """
        if tool not in TOOL_NAMES or not profile.allows(tool):
            raise PermissionDenied(f"agent {profile.name!r} may not use tool {tool!r}")
        try:
            if tool == "Read":
                return self.read(args["path"])
            if tool == "Write":
                return self.write(args["path"], args["content"], profile.name)
            if tool == "Edit":
                return self.edit(
                    args["path"], args["find"], args["replace"], profile.name,
                    args.get("occurrence"),
                )
            if tool == "Grep":
                return self.grep(
                    args["pattern"], args.get("glob", "*"), bool(args.get("literal", False))
                )
            if tool == "Bash":
                return self.bash(args["command"])
            return self.run_tests()
        except KeyError as err:
            return ToolResult(False, f"InvalidArguments: {tool} requires {err}")
        except (TypeError, ValueError) as err:
            return ToolResult(False, f"InvalidArguments: {err}")
        except PermissionDenied:
            raise
        except CtxError as err:
            return ToolResult(False, f"{type(err).__name__}: {err}")


def tool_read(sandbox: Sandbox, path: str) -> ToolResult:
    return sandbox.read(path)


def tool_write(sandbox: Sandbox, path: str, content: str, agent: str) -> ToolResult:
    return sandbox.write(path, content, agent)


def tool_edit(
    sandbox: Sandbox, path: str, find: str, replace: str, agent: str,
    occurrence: int | str | None = None,
) -> ToolResult:
    return sandbox.edit(path, find, replace, agent, occurrence)


def tool_run_tests(sandbox: Sandbox) -> ToolResult:
    return sandbox.run_tests()
