"""Repository indexing, hybrid semantic + lexical query, and rerank.

Scores:

* semantic: cosine between query and chunk embeddings.
* lexical (query): idf-weighted share of the query's identifiers that occur
  in the chunk, so a rare identifier named in the query dominates.
* lexical (rerank): Jaccard overlap of query and chunk identifier sets.
* final: ``SEMANTIC_WEIGHT * max(semantic, 0) + LEXICAL_WEIGHT * lexical``.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import EmptyIndex, IndexPersistenceError
from .chunker import CodeChunk, chunk_source, language_for, split_lines
from .embedding import Embedder
from .index import FileIndex, IndexRecord, VectorIndex
from .lexical import glob_matches, identifiers, is_binary, walk_files

SEMANTIC_WEIGHT = 0.7
LEXICAL_WEIGHT = 0.3
DEFAULT_K = 5
DEFAULT_INCLUDE = ("*.py", "*.js", "*.jsx", "*.mjs", "*.cjs", "*.ts", "*.tsx", "*.go")
SKIP_DIRS = frozenset({".git", "node_modules", "__pycache__"})


class QueryMode(str, enum.Enum):
    SEMANTIC = "semantic"
    LEXICAL = "lexical"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class RetrievalQuery:
    text: str
    k: int = DEFAULT_K
    mode: QueryMode = QueryMode.HYBRID

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "mode", QueryMode(self.mode))


def hybrid_score(semantic: float, lexical: float) -> float:
    return SEMANTIC_WEIGHT * max(semantic, 0.0) + LEXICAL_WEIGHT * lexical


@dataclass(frozen=True)
class ScoredSnippet:
    chunk: CodeChunk
    semantic_score: float
    lexical_score: float

    @property
    def final_score(self) -> float:
        return hybrid_score(self.semantic_score, self.lexical_score)

    def render(self) -> str:
        c = self.chunk
        label = f" {c.symbol_name}" if c.symbol_name else ""
        return f"{c.repo_rel_path}:{c.start_line}-{c.end_line} ({c.kind.value}{label})\n{c.text}"


@dataclass(frozen=True)
class IndexStats:
    files: int
    chunks: int
    skipped: int

    def __str__(self) -> str:
        return f"files={self.files} chunks={self.chunks} skipped={self.skipped}"


def _included(rel: str, include: Sequence[str]) -> bool:
    return any(glob_matches(rel, g) for g in include)


def iter_source_files(
    root: str | Path, include: Sequence[str] = DEFAULT_INCLUDE, exclude: Iterable[str] = ()
) -> list[str]:
    excluded = {e.strip("/") for e in exclude}
    out = []
    for rel in walk_files(root, SKIP_DIRS):
        if any(rel == e or rel.startswith(e + "/") for e in excluded):
            continue
        if _included(rel, include) and language_for(rel) is not None:
            out.append(rel)
    return out


def index_repository(
    root: str | Path,
    backend: VectorIndex,
    embedder: Embedder,
    include: Sequence[str] = DEFAULT_INCLUDE,
    exclude: Iterable[str] = (),
) -> IndexStats:
    """Chunk, embed and upsert every included source file under ``root``.

    Binary (NUL byte) and non-UTF-8 files are skipped. A FileIndex backend is
    persisted at the end. Re-running on an unchanged tree upserts the same ids.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"repository root {root} does not exist")
    files = chunks = skipped = 0
    for rel in iter_source_files(root, include, exclude):
        data = (root / rel).read_bytes()
        if is_binary(data):
            skipped += 1
            continue
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            skipped += 1
            continue
        files += 1
        for chunk in chunk_source(text, language_for(rel), rel):
            try:
                backend.upsert(
                    IndexRecord(
                        chunk.chunk_id, embedder.embed(chunk.text), rel,
                        chunk.start_line, chunk.end_line, chunk.kind, chunk.symbol_name,
                    )
                )
            except OSError as err:
                raise IndexPersistenceError(f"{rel}: {err}") from err
            chunks += 1
    if isinstance(backend, FileIndex):
        backend.embedder_id = backend.embedder_id or embedder.id
        backend.persist()
    return IndexStats(files, chunks, skipped)


class CodeIndex:
    """A backend plus the repository root and embedder needed to answer queries.

    Chunk text is re-read from the repository; records whose file has gone
    or shrunk are ignored.
    """

    def __init__(self, root: str | Path, backend: VectorIndex, embedder: Embedder):
        self.root = Path(root)
        self.backend = backend
        self.embedder = embedder
        self._chunks: dict[str, CodeChunk] | None = None
        self._idf: dict[str, float] = {}
        self._tokens: dict[str, set[str]] = {}

    def chunks(self) -> dict[str, CodeChunk]:
        if self._chunks is None:
            self._load()
        return self._chunks  # type: ignore[return-value]

    def _load(self) -> None:
        files: dict[str, list[str] | None] = {}
        chunks: dict[str, CodeChunk] = {}
        for rec in self.backend.records():
            if rec.repo_rel_path not in files:
                path = self.root / rec.repo_rel_path
                try:
                    files[rec.repo_rel_path] = split_lines(path.read_bytes().decode("utf-8"))
                except (OSError, UnicodeDecodeError):
                    files[rec.repo_rel_path] = None
            lines = files[rec.repo_rel_path]
            if lines is None or rec.end_line > len(lines):
                continue
            chunks[rec.chunk_id] = CodeChunk(
                rec.chunk_id, rec.repo_rel_path, rec.start_line, rec.end_line,
                rec.kind, rec.symbol_name, "".join(lines[rec.start_line - 1 : rec.end_line]),
            )
        self._chunks = chunks
        self._tokens = {cid: identifiers(c.text) for cid, c in chunks.items()}
        df: Counter[str] = Counter()
        for toks in self._tokens.values():
            df.update(toks)
        n = len(chunks)
        self._idf = {t: math.log(1.0 + n / d) for t, d in df.items()}

    def invalidate(self) -> None:
        self._chunks = None

    def lexical_score(self, query_text: str, chunk_id: str) -> float:
        self.chunks()
        q = sorted(t for t in identifiers(query_text) if t in self._idf)
        total = sum(self._idf[t] for t in q)
        if total == 0.0:
            return 0.0
        toks = self._tokens[chunk_id]
        return sum(self._idf[t] for t in q if t in toks) / total


def _sort_key(mode: QueryMode):
    def key(s: ScoredSnippet):
        primary = {
            QueryMode.SEMANTIC: s.semantic_score,
            QueryMode.LEXICAL: s.lexical_score,
            QueryMode.HYBRID: s.final_score,
        }[mode]
        return (-primary, s.chunk.repo_rel_path, s.chunk.start_line)

    return key


def query_index(index: CodeIndex, q: RetrievalQuery) -> list[ScoredSnippet]:
    """Top ``q.k`` snippets by the mode's score; ties by path then start line."""
    chunks = index.chunks()
    if not chunks:
        if q.mode is QueryMode.LEXICAL:
            return []
        raise EmptyIndex("the code index has no records")
    if q.mode is QueryMode.LEXICAL or not q.text:
        semantic = {cid: 0.0 for cid in chunks}
    else:
        semantic = index.backend.scores(index.embedder.embed(q.text))
    scored = [
        ScoredSnippet(chunk, semantic[cid], index.lexical_score(q.text, cid))
        for cid, chunk in chunks.items()
    ]
    scored.sort(key=_sort_key(q.mode))
    return scored[: q.k]


def jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def rerank(candidates: Sequence[ScoredSnippet], q: RetrievalQuery) -> list[ScoredSnippet]:
    """Re-score lexical overlap as identifier Jaccard and re-sort by final score."""
    q_ids = identifiers(q.text)
    rescored = [replace(s, lexical_score=jaccard(q_ids, identifiers(s.chunk.text))) for s in candidates]
    rescored.sort(key=_sort_key(QueryMode.HYBRID))
    return rescored


def retrieve(index: CodeIndex, q: RetrievalQuery) -> list[ScoredSnippet]:
    """Query then rerank."""
    return rerank(query_index(index, q), q)
