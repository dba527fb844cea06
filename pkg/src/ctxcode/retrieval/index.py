"""Exact-scan vector index backends behind one adapter contract.

Both backends keep vectors as float32 rows ordered by chunk id and score a
query with the same matrix-vector product, so for equal record sets they
return identical rankings. ``FileIndex`` persists to a directory holding
``records.jsonl`` (one record per line, vector as base64 little-endian
float32) and ``manifest.json`` (dims, count, embedder id).
"""

from __future__ import annotations

import base64
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import IndexPersistenceError
from .chunker import ChunkKind

RECORDS_FILE = "records.jsonl"
MANIFEST_FILE = "manifest.json"
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class IndexRecord:
    chunk_id: str
    vector: np.ndarray
    repo_rel_path: str
    start_line: int
    end_line: int
    kind: ChunkKind
    symbol_name: str

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IndexRecord):
            return NotImplemented
        return (
            self.meta() == other.meta()
            and self.vector.dtype == other.vector.dtype
            and self.vector.tobytes() == other.vector.tobytes()
        )

    def meta(self) -> tuple:
        return (self.chunk_id, self.repo_rel_path, self.start_line, self.end_line,
                ChunkKind(self.kind), self.symbol_name)


class VectorIndex:
    """Shared exact-scan implementation; subclasses add persistence."""

    def __init__(self, dims: int, embedder_id: str = ""):
        self.dims = dims
        self.embedder_id = embedder_id
        self._records: dict[str, IndexRecord] = {}
        self._matrix: np.ndarray | None = None
        self._order: list[str] = []

    def upsert(self, record: IndexRecord) -> None:
        vec = np.ascontiguousarray(record.vector, dtype="<f4")
        if vec.shape != (self.dims,):
            raise ValueError(f"vector has shape {vec.shape}, index dims is {self.dims}")
        self._records[record.chunk_id] = IndexRecord(
            record.chunk_id, vec, record.repo_rel_path, record.start_line,
            record.end_line, ChunkKind(record.kind), record.symbol_name,
        )
        self._matrix = None

    def count(self) -> int:
        return len(self._records)

    def get(self, chunk_id: str) -> IndexRecord:
        return self._records[chunk_id]

    def records(self) -> list[IndexRecord]:
        return [self._records[cid] for cid in sorted(self._records)]

    def _ensure_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._order = sorted(self._records)
            if self._order:
                self._matrix = np.stack([self._records[c].vector for c in self._order])
            else:
                self._matrix = np.zeros((0, self.dims), dtype="<f4")
        return self._matrix

    def scores(self, vector: np.ndarray) -> dict[str, float]:
        """Cosine score of every record (vectors are unit length)."""
        matrix = self._ensure_matrix()
        q = np.ascontiguousarray(vector, dtype="<f4")
        raw = matrix @ q
        return {cid: float(s) for cid, s in zip(self._order, raw)}

    def query_nearest(self, vector: np.ndarray, k: int) -> list[tuple[str, float]]:
        """Top-k (chunk_id, cosine); ties by path, then start line, then id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        scored = self.scores(vector)
        ranked = sorted(
            scored.items(),
            key=lambda kv: (
                -kv[1],
                self._records[kv[0]].repo_rel_path,
                self._records[kv[0]].start_line,
                kv[0],
            ),
        )
        return ranked[:k]


class MemoryIndex(VectorIndex):
    """Volatile backend."""


def _encode_vector(vec: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(vec, dtype="<f4").tobytes()).decode("ascii")


def _decode_vector(text: str, dims: int) -> np.ndarray:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    vec = np.frombuffer(raw, dtype="<f4").copy()
    if vec.shape != (dims,):
        raise ValueError(f"vector has {vec.shape[0]} values, manifest says {dims}")
    return vec


def _atomic_write_text(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class FileIndex(VectorIndex):
    """Directory-backed backend; call persist() to flush, FileIndex.load() to reopen."""

    def __init__(self, directory: str | Path, dims: int, embedder_id: str = ""):
        super().__init__(dims, embedder_id)
        self.directory = Path(directory)

    def persist(self) -> None:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            lines = []
            for rec in self.records():
                lines.append(
                    json.dumps(
                        {
                            "chunk_id": rec.chunk_id,
                            "path": rec.repo_rel_path,
                            "lines": [rec.start_line, rec.end_line],
                            "kind": ChunkKind(rec.kind).value,
                            "symbol": rec.symbol_name,
                            "vector": _encode_vector(rec.vector),
                        },
                        sort_keys=True,
                    )
                )
            _atomic_write_text(
                self.directory / RECORDS_FILE, "".join(line + "\n" for line in lines)
            )
            manifest = {
                "format": FORMAT_VERSION,
                "dims": self.dims,
                "count": len(lines),
                "embedder": self.embedder_id,
            }
            _atomic_write_text(
                self.directory / MANIFEST_FILE, json.dumps(manifest, sort_keys=True) + "\n"
            )
        except OSError as err:
            raise IndexPersistenceError(f"cannot persist index to {self.directory}: {err}") from err

    @classmethod
    def load(cls, directory: str | Path) -> "FileIndex":
        directory = Path(directory)
        try:
            manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
            dims, count = int(manifest["dims"]), int(manifest["count"])
            index = cls(directory, dims, str(manifest.get("embedder", "")))
            text = (directory / RECORDS_FILE).read_text(encoding="utf-8")
        except (OSError, ValueError, KeyError, TypeError) as err:
            raise IndexPersistenceError(f"cannot load index from {directory}: {err}") from err
        for n, line in enumerate(text.splitlines(), 1):
            try:
                raw = json.loads(line)
                start, end = raw["lines"]
                index.upsert(
                    IndexRecord(
                        chunk_id=raw["chunk_id"],
                        vector=_decode_vector(raw["vector"], dims),
                        repo_rel_path=raw["path"],
                        start_line=int(start),
                        end_line=int(end),
                        kind=ChunkKind(raw["kind"]),
                        symbol_name=raw["symbol"],
                    )
                )
            except (ValueError, KeyError, TypeError) as err:
                raise IndexPersistenceError(f"{directory / RECORDS_FILE}:{n}: {err}") from err
        if index.count() != count:
            raise IndexPersistenceError(
                f"manifest count {count} does not match {index.count()} records in {directory}"
            )
        return index
