"""Workspace snapshots, git-style unified diffs and a strict patch applier.

Diffs are computed over raw file bytes split on ``\\n`` only, so CR bytes and
missing final newlines survive a round trip. Non-UTF-8 bytes are carried
through ``surrogateescape``; write diff text back with the same error handler.
"""

from __future__ import annotations

import difflib
import hashlib
import os
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import PatchApplyError
from ..retrieval.lexical import walk_files

DEFAULT_EXCLUDE = (".git", "__pycache__")
CONTEXT_LINES = 3
NO_NEWLINE = "\\ No newline at end of file"

_HUNK_RE = re.compile(r"@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")


def _skip_dirs(exclude: Iterable[str]) -> frozenset[str]:
    return frozenset(e.strip("/") for e in exclude if "/" not in e.strip("/"))


def _excluded(rel: str, exclude: Iterable[str]) -> bool:
    parts = rel.split("/")
    for e in exclude:
        e = e.strip("/")
        if "/" in e:
            if rel == e or rel.startswith(e + "/"):
                return True
        elif e in parts:
            return True
    return False


@dataclass(frozen=True)
class Snapshot:
    """Content-addressed copy of every regular file in a workspace."""

    files: Mapping[str, bytes]
    exclude: tuple[str, ...] = DEFAULT_EXCLUDE

    @classmethod
    def capture(cls, root: str | Path, exclude: Iterable[str] = DEFAULT_EXCLUDE) -> "Snapshot":
        exclude = tuple(exclude)
        root = Path(root)
        files = {}
        for rel in walk_files(root, _skip_dirs(exclude)):
            if not _excluded(rel, exclude):
                files[rel] = (root / rel).read_bytes()
        return cls(files, exclude)

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        for rel in sorted(self.files):
            h.update(rel.encode("utf-8", "surrogateescape") + b"\0")
            h.update(hashlib.sha256(self.files[rel]).digest())
        return h.hexdigest()

    def restore(self, root: str | Path) -> None:
        """Make the workspace (outside excluded paths) match this snapshot exactly."""
        root = Path(root)
        for rel in walk_files(root, _skip_dirs(self.exclude)):
            if not _excluded(rel, self.exclude) and rel not in self.files:
                (root / rel).unlink()
        for rel, data in self.files.items():
            target = root / rel
            if target.is_file() and target.read_bytes() == data:
                continue
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
        # prune directories left empty by removed files
        keep = {os.path.dirname(rel) for rel in self.files}
        for dirpath, dirnames, _ in os.walk(root, topdown=False):
            rel = os.path.relpath(dirpath, root).replace(os.sep, "/")
            if rel == "." or _excluded(rel, self.exclude) or os.path.islink(dirpath):
                continue
            if not os.listdir(dirpath) and not any(k == rel or k.startswith(rel + "/") for k in keep):
                os.rmdir(dirpath)


def split_lines(data: bytes) -> list[str]:
    """Lines keeping their ``\\n``; only ``\\n`` separates lines."""
    text = data.decode("utf-8", "surrogateescape")
    lines = text.split("\n")
    out = [line + "\n" for line in lines[:-1]]
    if lines[-1]:
        out.append(lines[-1])
    return out


def _range(start: int, length: int) -> str:
    # unified-format convention: an empty range points at the line before it
    beginning = start + 1
    if length == 1:
        return str(beginning)
    if length == 0:
        beginning -= 1
    return f"{beginning},{length}"


def _emit(prefix: str, line: str, out: list[str]) -> None:
    if line.endswith("\n"):
        out.append(prefix + line)
    else:
        out.append(prefix + line + "\n")
        out.append(NO_NEWLINE + "\n")


def file_diff(path: str, before: bytes | None, after: bytes | None) -> str:
    """Git-style diff section for one path; empty when the contents are equal."""
    if before == after:
        return ""
    a = split_lines(before) if before is not None else []
    b = split_lines(after) if after is not None else []
    out = [f"diff --git a/{path} b/{path}\n"]
    if before is None:
        out.append("new file mode 100644\n")
    elif after is None:
        out.append("deleted file mode 100644\n")
    if not a and not b:
        return "".join(out)
    out.append(f"--- a/{path}\n" if before is not None else "--- /dev/null\n")
    out.append(f"+++ b/{path}\n" if after is not None else "+++ /dev/null\n")
    matcher = difflib.SequenceMatcher(None, a, b, autojunk=False)
    for group in matcher.get_grouped_opcodes(CONTEXT_LINES):
        i1, i2, j1, j2 = group[0][1], group[-1][2], group[0][3], group[-1][4]
        out.append(f"@@ -{_range(i1, i2 - i1)} +{_range(j1, j2 - j1)} @@\n")
        for tag, a1, a2, b1, b2 in group:
            if tag == "equal":
                for line in a[a1:a2]:
                    _emit(" ", line, out)
                continue
            for line in a[a1:a2]:
                _emit("-", line, out)
            for line in b[b1:b2]:
                _emit("+", line, out)
    return "".join(out)


def unified_diff(before: Mapping[str, bytes], after: Mapping[str, bytes]) -> str:
    """Diff over all paths in either mapping, in sorted path order."""
    parts = []
    for path in sorted(set(before) | set(after)):
        parts.append(file_diff(path, before.get(path), after.get(path)))
    return "".join(parts)


def touched_files(before: Mapping[str, bytes], after: Mapping[str, bytes]) -> list[str]:
    return sorted(p for p in set(before) | set(after) if before.get(p) != after.get(p))


# -- applying -----------------------------------------------------------------------


@dataclass
class _FilePatch:
    path: str
    created: bool = False
    deleted: bool = False
    hunks: list[tuple[int, list[str], list[str]]] = field(default_factory=list)


def _path_from_git_header(line: str) -> str:
    rest = line[len("diff --git ") :].rstrip("\n")
    n = (len(rest) - 5) // 2
    if n < 1 or not rest.startswith("a/") or rest[2 + n : 5 + n] != " b/":
        raise PatchApplyError(f"cannot parse header {line.rstrip()!r}")
    a, b = rest[2 : 2 + n], rest[5 + n :]
    if a != b:
        raise PatchApplyError(f"renames are not supported: {a!r} -> {b!r}")
    return a


def parse_patch(diff: str) -> list[_FilePatch]:
    lines = diff.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    patches: list[_FilePatch] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if not line.startswith("diff --git "):
            raise PatchApplyError(f"line {i + 1}: expected a diff header, got {line!r}")
        fp = _FilePatch(_path_from_git_header(line))
        patches.append(fp)
        i += 1
        while i < len(lines) and not lines[i].startswith(("--- ", "@@", "diff --git ")):
            if lines[i].startswith("new file mode"):
                fp.created = True
            elif lines[i].startswith("deleted file mode"):
                fp.deleted = True
            i += 1
        if i < len(lines) and lines[i].startswith("--- "):
            if i + 1 >= len(lines) or not lines[i + 1].startswith("+++ "):
                raise PatchApplyError(f"line {i + 2}: missing +++ line")
            fp.created = fp.created or lines[i] == "--- /dev/null"
            fp.deleted = fp.deleted or lines[i + 1] == "+++ /dev/null"
            i += 2
        while i < len(lines) and lines[i].startswith("@@"):
            m = _HUNK_RE.match(lines[i])
            if not m:
                raise PatchApplyError(f"line {i + 1}: bad hunk header {lines[i]!r}")
            old_start = int(m.group(1))
            old_len = int(m.group(2)) if m.group(2) is not None else 1
            new_len = int(m.group(4)) if m.group(4) is not None else 1
            i += 1
            old: list[str] = []
            new: list[str] = []
            last: str | None = None
            while i < len(lines) and (len(old) < old_len or len(new) < new_len or
                                      lines[i] == NO_NEWLINE):
                body = lines[i]
                tag, text = body[:1], body[1:] + "\n"
                if body == NO_NEWLINE:
                    if last in (" ", "-") and old:
                        old[-1] = old[-1][:-1]
                    if last in (" ", "+") and new:
                        new[-1] = new[-1][:-1]
                elif tag == " ":
                    old.append(text)
                    new.append(text)
                elif tag == "-":
                    old.append(text)
                elif tag == "+":
                    new.append(text)
                else:
                    raise PatchApplyError(f"line {i + 1}: unexpected hunk line {body!r}")
                last = tag if body != NO_NEWLINE else last
                i += 1
            if len(old) != old_len or len(new) != new_len:
                raise PatchApplyError(f"hunk in {fp.path} has wrong line counts")
            fp.hunks.append((old_start, old, new))
    return patches


def apply_unified_diff(files: Mapping[str, bytes], diff: str) -> dict[str, bytes]:
    """Apply ``diff`` exactly (no fuzz, no offsets); raises PatchApplyError."""
    result = dict(files)
    for fp in parse_patch(diff):
        if fp.created and fp.path in result:
            raise PatchApplyError(f"{fp.path} already exists")
        if not fp.created and fp.path not in result:
            raise PatchApplyError(f"{fp.path} does not exist")
        current = split_lines(result[fp.path]) if not fp.created else []
        out: list[str] = []
        pos = 0
        for old_start, old, new in fp.hunks:
            start = old_start - 1 if old else old_start
            if start < pos or current[start : start + len(old)] != old:
                raise PatchApplyError(f"hunk at line {old_start} does not apply to {fp.path}")
            out.extend(current[pos:start])
            out.extend(new)
            pos = start + len(old)
        out.extend(current[pos:])
        if fp.deleted:
            if out:
                raise PatchApplyError(f"deleting {fp.path} leaves content behind")
            del result[fp.path]
        else:
            result[fp.path] = "".join(out).encode("utf-8", "surrogateescape")
    return result


@dataclass(frozen=True)
class ChangeSet:
    summary: str
    unified_diff: str
    files_touched: tuple[str, ...]

    @classmethod
    def between(cls, before: Snapshot, after: Snapshot, summary: str = "") -> "ChangeSet":
        return cls(
            summary,
            unified_diff(before.files, after.files),
            tuple(touched_files(before.files, after.files)),
        )

    def replays(self, before: Snapshot, after: Snapshot) -> bool:
        try:
            return apply_unified_diff(before.files, self.unified_diff) == dict(after.files)
        except PatchApplyError:
            return False
