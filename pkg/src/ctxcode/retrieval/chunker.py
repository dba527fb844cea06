"""Split source files into function / type-definition chunks that tile the file.

Python uses the stdlib ``ast`` module. Brace languages (JavaScript,
TypeScript, Go) use a line-oriented recognizer: a lexical pass tracks
strings, comments and bracket depth, and top-level declaration lines are
matched against per-language patterns. Either way, input that cannot be
parsed comes back as a single ``file_remainder`` chunk.

Chunks of one file are non-overlapping and cover every line exactly once.
Gaps between declarations become ``file_remainder`` chunks, except gaps made
only of blank lines, which are folded into the preceding chunk (or the
following one at the top of a file).
"""

from __future__ import annotations

import ast
import enum
import hashlib
import re
from dataclasses import dataclass

from ..errors import UnsupportedLanguage


class ChunkKind(str, enum.Enum):
    FUNCTION = "function"
    TYPE_DEFINITION = "type_definition"
    FILE_REMAINDER = "file_remainder"


class Language(str, enum.Enum):
    PYTHON = "python"
    JAVASCRIPT = "javascript"
    TYPESCRIPT = "typescript"
    GO = "go"


EXTENSIONS = {
    ".py": Language.PYTHON,
    ".js": Language.JAVASCRIPT,
    ".jsx": Language.JAVASCRIPT,
    ".mjs": Language.JAVASCRIPT,
    ".cjs": Language.JAVASCRIPT,
    ".ts": Language.TYPESCRIPT,
    ".tsx": Language.TYPESCRIPT,
    ".go": Language.GO,
}


def language_for(path: str) -> Language | None:
    dot = path.rfind(".")
    return EXTENSIONS.get(path[dot:].lower()) if dot != -1 else None


def chunk_id_for(path: str, start_line: int, end_line: int) -> str:
    return hashlib.sha256(f"{path}\0{start_line}\0{end_line}".encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CodeChunk:
    chunk_id: str
    repo_rel_path: str
    start_line: int
    end_line: int
    kind: ChunkKind
    symbol_name: str
    text: str


def split_lines(text: str) -> list[str]:
    """Lines with their ``\\n`` terminators; only ``\\n`` counts as a break."""
    if not text:
        return []
    parts = text.split("\n")
    lines = [p + "\n" for p in parts[:-1]]
    if parts[-1]:
        lines.append(parts[-1])
    return lines


# (start, end, kind, symbol), 1-based inclusive
Span = tuple[int, int, ChunkKind, str]


def _python_spans(text: str, n_lines: int) -> list[Span] | None:
    if "\r" in text.replace("\r\n", ""):
        return None  # the tokenizer would count bare CR as a line break
    try:
        tree = ast.parse(text)
    except (SyntaxError, ValueError, RecursionError, MemoryError):
        return None
    spans = []
    for node in tree.body:
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            kind = ChunkKind.FUNCTION
        elif isinstance(node, ast.ClassDef):
            kind = ChunkKind.TYPE_DEFINITION
        else:
            continue
        start = min([node.lineno] + [d.lineno for d in node.decorator_list])
        end = node.end_lineno or node.lineno
        if not 1 <= start <= end <= n_lines:
            return None
        spans.append((start, end, kind, node.name))
    return spans


_JS_IDENT = r"[A-Za-z_$][\w$]*"
_JS_RULES = [
    (re.compile(rf"(?:export\s+)?(?:default\s+)?(?:async\s+)?function\b\s*\*?\s*({_JS_IDENT})"), ChunkKind.FUNCTION),
    (re.compile(rf"(?:export\s+)?(?:default\s+)?(?:abstract\s+)?class\s+({_JS_IDENT})"), ChunkKind.TYPE_DEFINITION),
    (re.compile(rf"(?:export\s+)?(?:declare\s+)?(?:const\s+)?(?:interface|enum)\s+({_JS_IDENT})"), ChunkKind.TYPE_DEFINITION),
    (re.compile(rf"(?:export\s+)?(?:declare\s+)?type\s+({_JS_IDENT})\s*(?:<[^=]*>)?\s*="), ChunkKind.TYPE_DEFINITION),
    (
        re.compile(
            rf"(?:export\s+)?(?:const|let|var)\s+({_JS_IDENT})\s*(?::[^=]+)?=\s*(?:async\s+)?"
            rf"(?:function\b|\([^)]*\)\s*(?::[^=]+)?=>|{_JS_IDENT}\s*=>)"
        ),
        ChunkKind.FUNCTION,
    ),
]
_GO_RULES = [
    (re.compile(r"func\s+(?:\([^)]*\)\s*)?([A-Za-z_]\w*)"), ChunkKind.FUNCTION),
    (re.compile(r"type\s+([A-Za-z_]\w*)\s+(?:struct|interface)\b"), ChunkKind.TYPE_DEFINITION),
]

BRACE_RULES = {
    Language.JAVASCRIPT: _JS_RULES,
    Language.TYPESCRIPT: _JS_RULES,
    Language.GO: _GO_RULES,
}
# Go raw strings use backticks like JS template literals.
_QUOTES = {Language.JAVASCRIPT: "'\"`", Language.TYPESCRIPT: "'\"`", Language.GO: "'\"`"}


def _lex_lines(lines: list[str], quotes: str) -> list[tuple[bool, int]] | None:
    """Per line: (starts in plain code, bracket depth at line end).

    None when the file is lexically unbalanced.
    """
    out = []
    depth = 0
    mode = None  # None | "block" | quote char
    for line in lines:
        starts_plain = mode is None
        i, n = 0, len(line)
        while i < n:
            c = line[i]
            if mode == "block":
                if line.startswith("*/", i):
                    mode, i = None, i + 2
                    continue
            elif mode is not None:
                if c == "\\":
                    i += 2
                    continue
                if c == mode:
                    mode = None
            else:
                if line.startswith("//", i):
                    break
                if line.startswith("/*", i):
                    mode, i = "block", i + 2
                    continue
                if c in quotes:
                    mode = c
                elif c in "([{":
                    depth += 1
                elif c in ")]}":
                    depth -= 1
                    if depth < 0:
                        return None
            i += 1
        if mode is not None and mode not in ("block", "`"):
            mode = None  # quote chars in JSX text and the like end with the line
        out.append((starts_plain, depth))
    if depth != 0 or mode is not None:
        return None
    return out


def _brace_spans(lines: list[str], language: Language) -> list[Span] | None:
    lex = _lex_lines(lines, _QUOTES[language])
    if lex is None:
        return None
    rules = BRACE_RULES[language]
    spans: list[Span] = []
    n = len(lines)
    i = 0
    while i < n:
        depth_before = lex[i - 1][1] if i else 0
        line = lines[i]
        match = None
        if lex[i][0] and depth_before == 0 and line[:1] not in (" ", "\t"):
            for rx, kind in rules:
                m = rx.match(line)
                if m:
                    match = (kind, m.group(1))
                    break
        if match is None:
            i += 1
            continue
        end = i
        while end < n:
            if lex[end][1] == 0:
                nxt = lines[end + 1] if end + 1 < n else ""
                if not nxt.strip() or (nxt[:1] not in (" ", "\t", "{", ")", "]", "}", ".")):
                    break
            end += 1
        if end == n:
            return None
        spans.append((i + 1, end + 1, match[0], match[1]))
        i = end + 1
    return spans


def _tile(path: str, lines: list[str], spans: list[Span]) -> list[CodeChunk]:
    n = len(lines)
    segs: list[list] = []  # [start, end, kind, symbol]
    cursor = 1
    for start, end, kind, symbol in spans:
        if start > cursor:
            segs.append([cursor, start - 1, None, ""])
        segs.append([start, end, kind, symbol])
        cursor = end + 1
    if cursor <= n:
        segs.append([cursor, n, None, ""])

    merged: list[list] = []
    pending_blank: list | None = None
    for seg in segs:
        if seg[2] is None and not "".join(lines[seg[0] - 1 : seg[1]]).strip():
            if merged:
                merged[-1][1] = seg[1]
            else:
                pending_blank = seg
            continue
        if pending_blank is not None:
            seg[0] = pending_blank[0]
            pending_blank = None
        merged.append(seg)
    if pending_blank is not None:
        merged.append(pending_blank)

    chunks = []
    for start, end, kind, symbol in merged:
        chunks.append(
            CodeChunk(
                chunk_id=chunk_id_for(path, start, end),
                repo_rel_path=path,
                start_line=start,
                end_line=end,
                kind=kind or ChunkKind.FILE_REMAINDER,
                symbol_name=symbol,
                text="".join(lines[start - 1 : end]),
            )
        )
    return chunks


def chunk_source(text: str, language_id: Language | str, path: str = "") -> list[CodeChunk]:
    """One chunk per top-level function / type definition plus remainder chunks.

    Raises UnsupportedLanguage; never raises on syntax errors.
    """
    try:
        language = Language(language_id)
    except ValueError:
        raise UnsupportedLanguage(f"no boundary grammar for {language_id!r}") from None
    lines = split_lines(text)
    if not lines:
        return []
    if language is Language.PYTHON:
        spans = _python_spans(text, len(lines))
    else:
        spans = _brace_spans(lines, language)
    if spans is None:
        spans = []
    return _tile(path, lines, spans)
