import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctxcode.errors import EmptyIndex, InvalidPattern, ProviderUnavailable
from ctxcode.retrieval import (ChunkKind, CodeChunk, CodeIndex, FileIndex, HttpEmbedder, IndexRecord,
                               MemoryIndex, NGramEmbedder, QueryMode, RetrievalQuery, ScoredSnippet,
                               cosine, index_repository, lexical_search, query_index, rerank)
from ctxcode.retrieval.index import MANIFEST_FILE, RECORDS_FILE
from ctxcode.synthetic import PLANTED_IDENTIFIER, function_corpus
from oracles import check_top_k, exhaustive_scores

EMB = NGramEmbedder()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    names = function_corpus(root, seed=3)
    backend = MemoryIndex(EMB.dims, EMB.id)
    stats = index_repository(root, backend, EMB)
    return root, names, backend, stats


# -- embedder -------------------------------------------------------------------------


def test_embedder_deterministic_and_unit():
    a, b = EMB.embed("def render(block):"), EMB.embed("def render(block):")
    assert a.shape == (256,) and np.array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-6
    assert abs(cosine(a, b) - 1.0) < 1e-6


def test_disjoint_alphabets_are_dissimilar():
    assert cosine(EMB.embed("abcabcabc abc"), EMB.embed("xyzxyz xyzzy")) < 0.5


def test_embed_empty_rejected():
    with pytest.raises(ValueError):
        EMB.embed("")


class _EmbeddingHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.seen.append((self.path, body, self.headers.get("Authorization")))
        vec = [float(len(body["input"])), 0.0, 3.0, 4.0]
        data = json.dumps({"data": [{"embedding": vec}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def test_http_embedder_against_local_server():
    server = HTTPServer(("127.0.0.1", 0), _EmbeddingHandler)
    server.seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        emb = HttpEmbedder(f"http://127.0.0.1:{server.server_port}/v1", "code-embed", api_key="k")
        vec = emb.embed("abc")
        assert emb.dims == 4
        np.testing.assert_allclose(vec, np.array([3, 0, 3, 4]) / np.sqrt(34))
        path, body, auth = server.seen[0]
        assert path == "/v1/embeddings" and body == {"model": "code-embed", "input": "abc"}
        assert auth == "Bearer k"
    finally:
        server.shutdown()
        server.server_close()


def test_http_embedder_unavailable():
    server = HTTPServer(("127.0.0.1", 0), _EmbeddingHandler)
    port = server.server_port
    server.server_close()
    with pytest.raises(ProviderUnavailable):
        HttpEmbedder(f"http://127.0.0.1:{port}", "m", timeout=2).embed("x")


# -- indexing -------------------------------------------------------------------------


def test_index_stats(corpus):
    root, names, backend, stats = corpus
    assert len(names) == 50
    assert (stats.files, stats.skipped) == (10, 0)
    assert stats.chunks >= 50 and backend.count() == stats.chunks
    assert str(stats) == f"files=10 chunks={stats.chunks} skipped=0"


def test_reindex_is_idempotent(corpus):
    root, _, backend, stats = corpus
    ids = [r.chunk_id for r in backend.records()]
    again = index_repository(root, backend, EMB)
    assert again == stats and [r.chunk_id for r in backend.records()] == ids


def test_empty_repo(tmp_path):
    assert str(index_repository(tmp_path, MemoryIndex(EMB.dims), EMB)) == "files=0 chunks=0 skipped=0"


def test_binary_file_skipped(tmp_path):
    (tmp_path / "a.py").write_bytes(b"x = 1\x00\n")
    (tmp_path / "b.py").write_text("def f():\n    return 1\n")
    stats = index_repository(tmp_path, MemoryIndex(EMB.dims), EMB)
    assert (stats.files, stats.chunks, stats.skipped) == (1, 1, 1)


def test_file_index_round_trip(corpus, tmp_path):
    root, _, backend, _ = corpus
    fi = FileIndex(tmp_path / "idx", EMB.dims, EMB.id)
    index_repository(root, fi, EMB)
    loaded = FileIndex.load(tmp_path / "idx")
    assert loaded.records() == backend.records()  # bit-exact vectors
    manifest = json.loads((tmp_path / "idx" / MANIFEST_FILE).read_text())
    assert manifest["dims"] == 256 and manifest["count"] == backend.count()
    first = json.loads((tmp_path / "idx" / RECORDS_FILE).read_text().splitlines()[0])
    assert set(first) == {"chunk_id", "path", "lines", "kind", "symbol", "vector"}


# -- querying -------------------------------------------------------------------------


def test_self_retrieval(corpus):
    root, _, backend, _ = corpus
    index = CodeIndex(root, backend, EMB)
    for cid, chunk in index.chunks().items():
        [top] = query_index(index, RetrievalQuery(chunk.text, 1, QueryMode.SEMANTIC))
        assert top.chunk.chunk_id == cid
        assert abs(top.semantic_score - 1.0) < 1e-6


def test_k_larger_than_index(tmp_path):
    (tmp_path / "a.py").write_text("def f():\n    return 1\n\n\ndef g():\n    return 2\n")
    backend = MemoryIndex(EMB.dims)
    index_repository(tmp_path, backend, EMB)
    res = query_index(CodeIndex(tmp_path, backend, EMB), RetrievalQuery("return", 50))
    assert len(res) == 2
    assert [s.final_score for s in res] == sorted((s.final_score for s in res), reverse=True)


def test_empty_index():
    with pytest.raises(EmptyIndex):
        query_index(CodeIndex(".", MemoryIndex(EMB.dims), EMB), RetrievalQuery("x"))


@pytest.mark.parametrize("k", [3, 4, 5])
def test_planted_identifier_in_top_k(corpus, k):
    root, _, backend, _ = corpus
    query = f"where is {PLANTED_IDENTIFIER} called"
    res = query_index(CodeIndex(root, backend, EMB), RetrievalQuery(query, k))
    oracle = exhaustive_scores(root, EMB, query)
    check_top_k(res, oracle, k)
    assert any(PLANTED_IDENTIFIER in s.chunk.text for s in res)


def test_planted_identifier_beats_semantic_ranking():
    # across seeds, some planted chunks rank below 5 semantically but first in hybrid mode
    import tempfile
    worst_semantic = 0
    for seed in range(8):
        with tempfile.TemporaryDirectory() as d:
            function_corpus(d, seed)
            backend = MemoryIndex(EMB.dims)
            index_repository(d, backend, EMB)
            index = CodeIndex(d, backend, EMB)
            q = f"where is {PLANTED_IDENTIFIER} called"
            sem = query_index(index, RetrievalQuery(q, 100, QueryMode.SEMANTIC))
            rank = next(i for i, s in enumerate(sem) if PLANTED_IDENTIFIER in s.chunk.text)
            worst_semantic = max(worst_semantic, rank)
            assert PLANTED_IDENTIFIER in query_index(index, RetrievalQuery(q, 3))[0].chunk.text
    assert worst_semantic >= 5


def test_final_score_formula(corpus):
    root, _, backend, _ = corpus
    for s in query_index(CodeIndex(root, backend, EMB), RetrievalQuery("user order total", 10)):
        assert s.final_score == pytest.approx(0.7 * max(s.semantic_score, 0) + 0.3 * s.lexical_score)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.floats(-1, 1, allow_nan=False), min_size=8, max_size=8), min_size=1,
                max_size=25),
       st.lists(st.floats(-1, 1, allow_nan=False), min_size=8, max_size=8), st.integers(1, 30))
def test_backend_equivalence(tmp_path_factory, vectors, query, k):
    mem, fi = MemoryIndex(8), FileIndex(tmp_path_factory.mktemp("fi"), 8)
    for i, v in enumerate(vectors):
        v = np.asarray(v) + 1e-3
        rec = IndexRecord(f"c{i:03d}", v / np.linalg.norm(v), f"p{i % 3}.py", i + 1, i + 1,
                          ChunkKind.FUNCTION, f"f{i}")
        mem.upsert(rec)
        fi.upsert(rec)
    fi.persist()
    q = np.asarray(query) + 2e-3
    expected = mem.query_nearest(q, k)
    assert fi.query_nearest(q, k) == expected
    assert FileIndex.load(fi.directory).query_nearest(q, k) == expected


# -- lexical and rerank ------------------------------------------------------------------


def test_lexical_search(corpus):
    root = corpus[0]
    hits = lexical_search(root, PLANTED_IDENTIFIER, "*.py", literal=True)
    assert len(hits) == 1 and hits[0].line.count(PLANTED_IDENTIFIER) == 2
    assert lexical_search(root, "no_such_thing_xyz") == []
    assert lexical_search(root, r"def \w+_0_0") == lexical_search(root, r"def \w+_0_0")
    with pytest.raises(InvalidPattern):
        lexical_search(root, "(")


def test_lexical_search_two_planted(tmp_path):
    (tmp_path / "a.js").write_text("function renewSession() {}\n")
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "c.js").write_text("x\nrenewSession();\n")
    hits = lexical_search(tmp_path, "renewSession", literal=True)
    assert [(h.path, h.line_number) for h in hits] == [("a.js", 1), ("b/c.js", 2)]


def snippet(text, sem, path="a.py", line=1):
    chunk = CodeChunk(f"{path}{line}", path, line, line, ChunkKind.FUNCTION, "", text)
    return ScoredSnippet(chunk, sem, 0.0)


def test_rerank_cases():
    q = RetrievalQuery("alpha beta gamma delta")
    assert rerank([], q) == []
    one = snippet("x", 0.5)
    assert [s.chunk for s in rerank([one], q)] == [one.chunk]
    none_shared = snippet("omega", 0.5, "a.py")
    three_shared = snippet("alpha beta gamma", 0.5, "b.py")
    out = rerank([none_shared, three_shared], q)
    assert out[0].chunk == three_shared.chunk
    assert out[0].lexical_score == pytest.approx(3 / 4)


@given(st.lists(st.tuples(st.text("abc _", max_size=12), st.floats(-1, 1)), max_size=12),
       st.text("abc _", min_size=1, max_size=12))
def test_rerank_is_permutation(items, qtext):
    cands = [snippet(t, s, f"p{i}.py") for i, (t, s) in enumerate(items)]
    out = rerank(cands, RetrievalQuery(qtext))
    assert sorted(s.chunk.chunk_id for s in out) == sorted(s.chunk.chunk_id for s in cands)
    finals = [s.final_score for s in out]
    assert finals == sorted(finals, reverse=True)
