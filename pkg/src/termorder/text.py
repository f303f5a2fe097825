"""Text ingestion: tokenization, Porter stemming, vocabulary and corpus readers."""

from __future__ import annotations

import re
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator

from nltk.stem.porter import PorterStemmer

_TAG = re.compile(r"<[^>]*>")
_WORD = re.compile(r"[^\W_]+")

_porter = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)

# Small function-word list; only used when stopping is switched on.
STOPWORDS = frozenset(
    """a an and are as at be but by for from has have he in is it its of on or
    that the this to was were will with""".split()
)

UNKNOWN_TERM = -1


class CorpusFormatError(ValueError):
    """Raised when a corpus or topics file cannot be parsed."""

    def __init__(self, message, offset, count):
        super().__init__(f"{message} (byte offset {offset}, after {count} documents)")
        self.offset = offset
        self.count = count


def tokenize(raw_text: str) -> list[str]:
    """Lowercased alphanumeric runs of ``raw_text`` with markup tags dropped."""
    return [m.group().lower() for m in _WORD.finditer(_TAG.sub(" ", raw_text))]


@lru_cache(maxsize=1 << 18)
def stem(token: str) -> str:
    if not token.isalpha():
        return token
    return _porter.stem(token, to_lowercase=False)


def analyze(raw_text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    tokens = tokenize(raw_text)
    if stopwords:
        tokens = [t for t in tokens if t not in stopwords]
    return [stem(t) for t in tokens]


class Vocabulary:
    """Dense term ids, assigned in order of first sight."""

    def __init__(self, terms: Iterable[str] = ()):
        self.terms: list[str] = []
        self._ids: dict[str, int] = {}
        for t in terms:
            self.add(t)

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self._ids

    def add(self, term: str) -> int:
        tid = self._ids.get(term)
        if tid is None:
            tid = self._ids[term] = len(self.terms)
            self.terms.append(term)
        return tid

    def lookup(self, term: str) -> int:
        return self._ids.get(term, UNKNOWN_TERM)

    def term(self, term_id: int) -> str:
        return self.terms[term_id] if term_id >= 0 else "<unk>"


@dataclass(frozen=True)
class Token:
    surface: str
    term_id: int


@dataclass
class Document:
    external_id: str
    terms: list[int]

    @property
    def length(self) -> int:
        return len(self.terms)


@dataclass
class Query:
    query_id: str
    terms: list[int]
    text: str = ""


@dataclass
class Pipeline:
    """Tokenize + stem + map to term ids.

    Documents grow the vocabulary; queries only look terms up, so a query
    term that never occurs in the collection maps to ``UNKNOWN_TERM``.
    """

    vocab: Vocabulary = field(default_factory=Vocabulary)
    stopwords: frozenset[str] | None = None

    def tokens(self, raw_text: str, grow: bool = True) -> list[Token]:
        ids = self.vocab.add if grow else self.vocab.lookup
        return [Token(s, ids(s)) for s in analyze(raw_text, self.stopwords)]

    def document(self, external_id: str, raw_text: str) -> Document:
        return self._document(external_id, analyze(raw_text, self.stopwords))

    def _document(self, external_id, stems):
        add = self.vocab.add
        return Document(external_id, [add(s) for s in stems])

    def query(self, query_id: str, raw_text: str) -> Query:
        lookup = self.vocab.lookup
        return Query(query_id, [lookup(s) for s in analyze(raw_text, self.stopwords)], raw_text)


def _iter_trec_records(path):
    count = 0
    offset = 0
    start = None
    buf: list[bytes] = []
    with open(path, "rb") as fh:
        for line in fh:
            stripped = line.strip()
            if stripped.upper().startswith(b"<DOC>"):
                if start is not None:
                    raise CorpusFormatError("nested <DOC>", offset, count)
                start = offset
                buf = [line]
            elif start is not None:
                buf.append(line)
                if stripped.upper().endswith(b"</DOC>"):
                    block = b"".join(buf).decode("utf-8", errors="replace")
                    m = re.search(r"<DOCNO>\s*(.*?)\s*</DOCNO>", block, re.S | re.I)
                    if m is None or not m.group(1):
                        raise CorpusFormatError("document without <DOCNO>", start, count)
                    body = block[: m.start()] + " " + block[m.end():]
                    yield m.group(1), body
                    count += 1
                    start = None
            elif stripped:
                raise CorpusFormatError("text outside <DOC> block", offset, count)
            offset += len(line)
    if start is not None:
        raise CorpusFormatError("unterminated <DOC> block", start, count)


def _iter_line_records(path):
    count = 0
    offset = 0
    with open(path, "rb") as fh:
        for line in fh:
            text = line.decode("utf-8", errors="replace").rstrip("\r\n")
            if text.strip():
                doc_id, tab, body = text.partition("\t")
                if not tab or not doc_id.strip():
                    raise CorpusFormatError("expected 'id<TAB>text'", offset, count)
                yield doc_id.strip(), body
                count += 1
            offset += len(line)


def read_records(path, format: str = "trec_text") -> Iterator[tuple[str, str]]:
    """Yield raw ``(external_id, text)`` records in file order."""
    if format == "trec_text":
        return _iter_trec_records(path)
    if format == "lines":
        return _iter_line_records(path)
    raise ValueError(f"unknown corpus format {format!r}")


def _analyze_chunk(args):
    texts, stopwords = args
    return [analyze(t, stopwords) for t in texts]


def read_corpus(path, format: str = "trec_text", pipeline: Pipeline | None = None,
                workers: int = 1, chunk_size: int = 256) -> Iterator[Document]:
    """Stream Documents from ``path``.

    With ``workers > 1`` tokenization runs in a process pool; term ids are
    still assigned in file order, so the output does not depend on the
    worker count.
    """
    pipeline = pipeline if pipeline is not None else Pipeline()
    records = read_records(path, format)
    if workers <= 1:
        for doc_id, text in records:
            yield pipeline.document(doc_id, text)
        return

    def chunks():
        batch = []
        for rec in records:
            batch.append(rec)
            if len(batch) == chunk_size:
                yield batch
                batch = []
        if batch:
            yield batch

    with ProcessPoolExecutor(max_workers=workers) as pool:
        queue = deque()
        for batch in chunks():
            queue.append((batch, pool.submit(_analyze_chunk, ([t for _, t in batch], pipeline.stopwords))))
            if len(queue) >= 4 * workers:
                yield from _drain(queue.popleft(), pipeline)
        while queue:
            yield from _drain(queue.popleft(), pipeline)


def _drain(item, pipeline):
    batch, future = item
    for (doc_id, _), stems in zip(batch, future.result()):
        yield pipeline._document(doc_id, stems)


def read_topics(path, pipeline: Pipeline) -> list[Query]:
    """Topics file: one ``query_id<TAB>title`` per line."""
    queries = []
    for qid, title in _iter_line_records(path):
        queries.append(pipeline.query(qid, title))
    return queries
