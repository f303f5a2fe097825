"""Seeded synthetic collections with planted term-order statistics."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .text import Document, Pipeline, Vocabulary

SEM_BUCKETS = ("zero", "low", "high")


def sem_bucket(sem: float) -> str:
    if sem == 0.0:
        return "zero"
    return "low" if sem <= 0.25 else "high"


@dataclass(frozen=True)
class PlantedPair:
    first: int
    second: int
    middle: int
    df_ab: int
    df_ba: int
    bucket: str


@dataclass
class OrderCorpus:
    """Documents plus query-term pairs whose Df ratio was planted."""

    vocab: Vocabulary
    documents: list[Document]
    pairs: list[PlantedPair]
    fillers: list[int]
    pad: int

    def pairs_in(self, bucket):
        return [p for p in self.pairs if p.bucket == bucket]


def _planted_counts(rng, bucket):
    """(Df(a,b), Df(b,a)) landing in ``bucket`` even after the checker adds
    one document in each order."""
    if bucket == "zero":
        n = rng.randint(4, 8)
        return n, n
    if bucket == "high":
        return rng.randint(10, 16), rng.randint(0, 1)
    ba = rng.randint(3, 6)
    return ba + rng.randint(1, ba), ba


def order_corpus(seed: int = 0, pairs_per_bucket: int = 4, background_docs: int = 150,
                 num_fillers: int = 120, doc_len=(8, 30)) -> OrderCorpus:
    """Corpus where each planted pair (a, b) appears adjacently in a chosen
    number of documents in each order, so Df(a,b) and Df(b,a) are known for
    every window >= 2.  Every planted document holds one a and one b, so the
    two terms also share the same collection frequency.
    """
    rng = random.Random(seed)
    vocab = Vocabulary()
    fillers = [vocab.add(f"fill{i}") for i in range(num_fillers)]
    pad = vocab.add("zzpad")
    docs: list[Document] = []
    pairs: list[PlantedPair] = []

    def filler_doc(n):
        return [rng.choice(fillers) for _ in range(n)]

    for bucket in SEM_BUCKETS:
        for _ in range(pairs_per_bucket):
            k = len(pairs)
            a, b, m = vocab.add(f"qa{k}"), vocab.add(f"qb{k}"), vocab.add(f"qm{k}")
            ab, ba = _planted_counts(rng, bucket)
            for first, second, count in ((a, b, ab), (b, a, ba)):
                for _ in range(count):
                    body = filler_doc(rng.randint(*doc_len))
                    at = rng.randint(0, len(body))
                    body[at:at] = [first, second]
                    docs.append(Document(f"p{len(docs):05d}", body))
            for _ in range(3):
                body = filler_doc(rng.randint(*doc_len))
                body.insert(rng.randint(0, len(body)), m)
                docs.append(Document(f"p{len(docs):05d}", body))
            pairs.append(PlantedPair(a, b, m, ab, ba, bucket))
    for _ in range(background_docs):
        docs.append(Document(f"p{len(docs):05d}", filler_doc(rng.randint(*doc_len))))
    docs.append(Document(f"p{len(docs):05d}", [pad]))
    return OrderCorpus(vocab, docs, pairs, fillers, pad)


@dataclass
class RetrievalCollection:
    records: list[tuple[str, str]]
    topics: list[tuple[str, str]]
    qrels: dict[str, dict[str, int]]

    def write(self, directory) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {"corpus": directory / "corpus.tsv", "topics": directory / "topics.tsv",
                 "qrels": directory / "qrels.txt"}
        paths["corpus"].write_text("".join(f"{d}\t{t}\n" for d, t in self.records), encoding="utf-8")
        paths["topics"].write_text("".join(f"{q}\t{t}\n" for q, t in self.topics), encoding="utf-8")
        paths["qrels"].write_text(
            "".join(f"{q} 0 {d} {g}\n" for q in sorted(self.qrels) for d, g in sorted(self.qrels[q].items())),
            encoding="utf-8")
        return paths

    def pipeline_documents(self, pipeline: Pipeline | None = None):
        pipeline = pipeline or Pipeline()
        return pipeline, [pipeline.document(d, t) for d, t in self.records]


def retrieval_collection(seed: int = 0, num_docs: int = 1000, num_queries: int = 20,
                         terms_per_query=(2, 3), doc_len=(20, 60)) -> RetrievalCollection:
    """Ad-hoc collection where relevance tracks query term order.

    Relevant documents contain the query terms in query order at small gaps;
    a smaller set of non-relevant decoys contains the same terms in reverse
    order; the remainder is background text with
    occasional stray query terms.
    """
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(400)]
    records: list[tuple[str, str]] = []
    topics = []
    qrels: dict[str, dict[str, int]] = {}
    per_query = max(4, num_docs // (4 * num_queries))

    def body():
        return [rng.choice(words) for _ in range(rng.randint(*doc_len))]

    def embed(phrase):
        out = body()
        at = rng.randint(0, len(out))
        seq = []
        for t in phrase:
            seq.append(t)
            seq.extend(rng.choice(words) for _ in range(rng.randint(0, 1)))
        out[at:at] = seq
        return out

    query_terms = []
    for q in range(num_queries):
        n = rng.randint(*terms_per_query)
        terms = [f"t{q}x{i}" for i in range(n)]
        query_terms.append(terms)
        topics.append((f"{q + 1}", " ".join(terms)))
    for q, terms in enumerate(query_terms):
        qid = f"{q + 1}"
        qrels[qid] = {}
        for r in range(per_query):
            doc_id = f"d{len(records):06d}"
            records.append((doc_id, " ".join(embed(terms))))
            qrels[qid][doc_id] = 1
        for r in range(max(1, per_query // 3)):
            doc_id = f"d{len(records):06d}"
            records.append((doc_id, " ".join(embed(terms[::-1]))))
            qrels[qid][doc_id] = 0
    while len(records) < num_docs:
        tokens = body()
        if rng.random() < 0.3:
            terms = rng.choice(query_terms)
            tokens.insert(rng.randint(0, len(tokens)), rng.choice(terms))
        records.append((f"d{len(records):06d}", " ".join(tokens)))
    rng.shuffle(records)
    return RetrievalCollection(records, topics, qrels)
