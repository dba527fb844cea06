"""Code retrieval: chunking, embedding, vector backends and hybrid search."""

from .chunker import ChunkKind, CodeChunk, Language, chunk_source, language_for
from .embedding import Embedder, HttpEmbedder, NGramEmbedder, cosine
from .index import FileIndex, IndexRecord, MemoryIndex, VectorIndex
from .lexical import LineMatch, identifiers, lexical_search
from .search import (
    CodeIndex,
    IndexStats,
    QueryMode,
    RetrievalQuery,
    ScoredSnippet,
    hybrid_score,
    index_repository,
    query_index,
    rerank,
    retrieve,
)

__all__ = [
    "ChunkKind", "CodeChunk", "CodeIndex", "Embedder", "FileIndex", "HttpEmbedder",
    "IndexRecord", "IndexStats", "Language", "LineMatch", "MemoryIndex", "NGramEmbedder",
    "QueryMode", "RetrievalQuery", "ScoredSnippet", "VectorIndex", "chunk_source", "cosine",
    "hybrid_score", "identifiers", "index_repository", "language_for", "lexical_search",
    "query_index", "rerank", "retrieve",
]
