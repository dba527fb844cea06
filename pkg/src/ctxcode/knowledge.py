"""External knowledge: corpus search plus TOC / Q&A synthesis for layer L2.

The corpus is a directory of UTF-8 text files. Headings are lines starting
with ``#`` or all-caps lines of at most 60 characters. Without a provider
(or when it is unavailable) synthesis is extractive: one bullet per heading
made of the heading and the first sentence under it, and answers are the
corpus sentence sharing the most terms with the question.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpus, NoFixtureMatch, NoRelevantDoc, ProviderUnavailable
from .provider import Provider, ProviderRequest
from .retrieval.embedding import Embedder, NGramEmbedder, cosine
from .retrieval.lexical import is_binary, walk_files

SYNTH_AGENT = "knowledge-synthesizer"
MAX_BULLET_CHARS = 200
MAX_HEADING_CHARS = 60

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")
_WORD = re.compile(r"[a-z0-9]+")
STOPWORDS = frozenset(
    "a an and are as at be by can do does for from how i in is it its of on or should "
    "that the this to was we what when where which who why will with you your".split()
)


@dataclass(frozen=True)
class ExternalDoc:
    doc_id: str
    title: str
    origin: str
    text: str


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    doc_id: str


@dataclass
class KnowledgeSummary:
    toc: dict[str, list[str]]
    qa_pairs: list[QAPair] = field(default_factory=list)
    docs: list[ExternalDoc] = field(default_factory=list)

    def doc(self, doc_id: str) -> ExternalDoc:
        for d in self.docs:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)

    def render_doc(self, doc_id: str) -> str:
        d = self.doc(doc_id)
        lines = [f"Source: {d.title} ({d.origin})"]
        lines.extend(f"- {b}" for b in self.toc.get(doc_id, []))
        return "\n".join(lines)

    def render_qa(self) -> str:
        return "\n".join(
            f"Q: {qa.question}\nA: {qa.answer} [{self.doc(qa.doc_id).origin}]" for qa in self.qa_pairs
        )

    def render(self) -> str:
        parts = [self.render_doc(d) for d in self.toc]
        if self.qa_pairs:
            parts.append(self.render_qa())
        return "\n\n".join(parts)


def is_heading(line: str) -> bool:
    s = line.strip()
    if s.startswith("#"):
        return bool(s.lstrip("#").strip())
    return bool(s) and len(s) <= MAX_HEADING_CHARS and s.isupper()


def heading_text(line: str) -> str:
    return line.strip().lstrip("#").strip()


def doc_id_for(origin: str) -> str:
    return hashlib.sha256(origin.encode("utf-8")).hexdigest()[:16]


def load_corpus(corpus_dir: str | Path) -> list[ExternalDoc]:
    """Every non-empty UTF-8 text file under ``corpus_dir``, ordered by path."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory {corpus_dir} does not exist")
    docs = []
    for rel in walk_files(corpus_dir):
        data = (corpus_dir / rel).read_bytes()
        if is_binary(data):
            continue
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError:
            continue
        if not text.strip():
            continue
        title = next((heading_text(l) for l in text.splitlines() if is_heading(l)), Path(rel).name)
        docs.append(ExternalDoc(doc_id_for(rel), title, rel, text))
    return docs


def search_corpus(
    corpus: str | Path | Sequence[ExternalDoc],
    terms: Sequence[str],
    k: int,
    embedder: Embedder | None = None,
) -> list[ExternalDoc]:
    """Top ``min(k, corpus size)`` documents by embedding similarity to the joined terms."""
    if k < 1:
        raise ValueError("k must be >= 1")
    docs = load_corpus(corpus) if isinstance(corpus, (str, Path)) else list(corpus)
    if not docs:
        raise EmptyCorpus("the knowledge corpus has no documents")
    embedder = embedder or NGramEmbedder()
    query = " ".join(t for t in terms if t.strip())
    if not query:
        ranked = sorted(docs, key=lambda d: d.origin)
    else:
        qv = embedder.embed(query)
        scored = [(cosine(qv, embedder.embed(d.text)), d) for d in docs]
        ranked = [d for _, d in sorted(scored, key=lambda sd: (-sd[0], sd[1].origin))]
    return ranked[:k]


# -- extractive synthesis ---------------------------------------------------------


def _cap(text: str) -> str:
    text = " ".join(text.split())
    return text if len(text) <= MAX_BULLET_CHARS else text[: MAX_BULLET_CHARS - 3] + "..."


def sections(text: str) -> list[tuple[str, list[str]]]:
    """(heading, paragraphs) in document order; text before the first heading is dropped."""
    out: list[tuple[str, list[str]]] = []
    para: list[str] = []

    def flush() -> None:
        if out and para:
            out[-1][1].append(" ".join(para))
        para.clear()

    for line in text.splitlines():
        if is_heading(line):
            flush()
            out.append((heading_text(line), []))
        elif not line.strip():
            flush()
        else:
            para.append(line.strip())
    flush()
    return out


def sentences(text: str) -> list[str]:
    """Sentences of the non-heading text, paragraphs re-joined across line wraps."""
    paras: list[str] = []
    cur: list[str] = []
    for line in text.splitlines():
        if is_heading(line) or not line.strip():
            if cur:
                paras.append(" ".join(cur))
                cur = []
            continue
        cur.append(line.strip())
    if cur:
        paras.append(" ".join(cur))
    out = []
    for p in paras:
        out.extend(s.strip() for s in _SENTENCE_END.split(p) if s.strip())
    return out


def extractive_toc(doc: ExternalDoc) -> list[str]:
    secs = sections(doc.text)
    if not secs:
        first = sentences(doc.text)
        return [_cap(f"{doc.title}: {first[0]}" if first else doc.title)]
    bullets = []
    for heading, paras in secs:
        first = _SENTENCE_END.split(paras[0])[0].strip() if paras else ""
        bullets.append(_cap(f"{heading}: {first}" if first else heading))
    return bullets


def terms_of(text: str) -> set[str]:
    return {w for w in _WORD.findall(text.lower()) if w not in STOPWORDS}


def extractive_answer(docs: Sequence[ExternalDoc], question: str) -> QAPair:
    """Sentence with the most shared terms; ties go to the higher Jaccard, then corpus order."""
    q = terms_of(question)
    best: tuple[tuple[int, float], str, str] | None = None
    for doc in docs:
        for sent in sentences(doc.text):
            s = terms_of(sent)
            overlap = len(q & s)
            if not overlap:
                continue
            score = (overlap, overlap / len(q | s))
            if best is None or score > best[0]:
                best = (score, sent, doc.doc_id)
    if best is None:
        raise NoRelevantDoc(f"no document shares a term with {question!r}")
    return QAPair(question, best[1], best[2])


# -- provider-backed synthesis ---------------------------------------------------


def _provider_bullets(provider: Provider, doc: ExternalDoc) -> list[str] | None:
    prompt = (
        "Summarize the document below as a short list of key bullet points. "
        'Reply with JSON {"bullets": [...]}.\n'
        f"Document: {doc.title} ({doc.origin})\n---\n{doc.text}"
    )
    try:
        resp = provider.complete(ProviderRequest(SYNTH_AGENT, prompt))
        data = json.loads(resp.last_message() or "")
        bullets = data["bullets"]
    except (ProviderUnavailable, NoFixtureMatch, ValueError, KeyError, TypeError):
        return None
    if not isinstance(bullets, list) or not all(isinstance(b, str) for b in bullets):
        return None
    return [_cap(b) for b in bullets]


def _provider_answer(
    provider: Provider, docs: Sequence[ExternalDoc], question: str
) -> QAPair | None:
    listing = "\n\n".join(f"[{d.doc_id}] {d.title}\n{d.text}" for d in docs)
    prompt = (
        "Answer the question from exactly one of the documents below. "
        'Reply with JSON {"answer": "...", "doc_id": "..."}.\n'
        f"Question: {question}\n---\n{listing}"
    )
    try:
        resp = provider.complete(ProviderRequest(SYNTH_AGENT, prompt))
        data = json.loads(resp.last_message() or "")
        answer, doc_id = str(data["answer"]), str(data["doc_id"])
    except (ProviderUnavailable, NoFixtureMatch, ValueError, KeyError, TypeError):
        return None
    if doc_id not in {d.doc_id for d in docs} or not answer.strip():
        return None  # never cite a source outside the searched set
    return QAPair(question, answer, doc_id)


def synthesize(
    docs: Sequence[ExternalDoc],
    questions: Sequence[str] = (),
    provider: Provider | None = None,
) -> KnowledgeSummary:
    """TOC bullets per document and one attributed answer per question.

    Questions no document can answer are left out.
    """
    if not docs:
        raise ValueError("synthesize needs at least one document")
    toc = {}
    for doc in docs:
        bullets = _provider_bullets(provider, doc) if provider is not None else None
        toc[doc.doc_id] = bullets if bullets is not None else extractive_toc(doc)
    summary = KnowledgeSummary(toc, [], list(docs))
    for question in questions:
        try:
            summary.qa_pairs.append(ask_followup(summary, question, provider))
        except NoRelevantDoc:
            continue
    return summary


def ask_followup(
    summary: KnowledgeSummary, question: str, provider: Provider | None = None
) -> QAPair:
    if not summary.docs:
        raise ValueError("summary has no documents")
    if provider is not None:
        qa = _provider_answer(provider, summary.docs, question)
        if qa is not None:
            return qa
    return extractive_answer(summary.docs, question)
