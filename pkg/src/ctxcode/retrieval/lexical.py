"""grep-style exact matching and identifier tokenization."""

from __future__ import annotations

import fnmatch
import os
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import InvalidPattern

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
SNIFF_BYTES = 8192


def identifiers(text: str) -> set[str]:
    return set(IDENT_RE.findall(text))


def is_binary(data: bytes) -> bool:
    return b"\x00" in data[:SNIFF_BYTES]


@dataclass(frozen=True)
class LineMatch:
    path: str
    line_number: int
    line: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line_number}:{self.line}"


def glob_matches(rel_path: str, glob: str) -> bool:
    """fnmatch on the posix relative path; a slash-free glob also tries the basename."""
    if fnmatch.fnmatchcase(rel_path, glob):
        return True
    if glob.startswith("**/") and fnmatch.fnmatchcase(rel_path, glob[3:]):
        return True
    return "/" not in glob and fnmatch.fnmatchcase(rel_path.rsplit("/", 1)[-1], glob)


def walk_files(root: str | Path, skip_dirs: frozenset[str] = frozenset({".git"})) -> list[str]:
    """Sorted posix paths of regular, non-symlink files under ``root``."""
    root = os.fspath(root)
    found = []
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        dirnames[:] = sorted(d for d in dirnames if d not in skip_dirs)
        for name in filenames:
            full = os.path.join(dirpath, name)
            if os.path.islink(full) or not os.path.isfile(full):
                continue
            found.append(os.path.relpath(full, root).replace(os.sep, "/"))
    return sorted(found)


def lexical_search(
    root: str | Path, pattern: str, glob: str = "*", literal: bool = False
) -> list[LineMatch]:
    """All lines under ``root`` matching ``pattern``, ordered by path then line.

    Binary files and symlinks are skipped.
    """
    try:
        rx = re.compile(re.escape(pattern) if literal else pattern)
    except re.error as err:
        raise InvalidPattern(f"invalid pattern {pattern!r}: {err}") from None
    results = []
    for rel in walk_files(root):
        if not glob_matches(rel, glob):
            continue
        data = Path(root, rel).read_bytes()
        if is_binary(data):
            continue
        lines = data.decode("utf-8", "replace").split("\n")
        if lines[-1] == "":
            lines.pop()
        for n, line in enumerate(lines, 1):
            if rx.search(line):
                results.append(LineMatch(rel, n, line.rstrip("\r")))
    return results
