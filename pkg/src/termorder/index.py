"""Positional inverted index and window operators.

Every occurrence is stored as a 64-bit key ``doc_ordinal << 32 | position``.
Keys of one term are sorted, and two keys from different documents are at
least ``2**32 - max_len`` apart, so any window span smaller than that never
matches across a document boundary.  This lets the same searchsorted-based
counting routine serve both single-document and whole-collection queries.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .text import Document, Vocabulary

FORMAT_VERSION = 1
_SHIFT = np.int64(32)
_MASK = np.int64((1 << 32) - 1)
_EMPTY = np.zeros(0, dtype=np.int64)


class IndexFormatError(ValueError):
    pass


class WindowKind(str, Enum):
    EXACT_PHRASE = "exact_phrase"
    UNORDERED = "unordered"
    ORDERED = "ordered"


@dataclass(frozen=True)
class WindowSpec:
    kind: WindowKind
    span: int

    def __post_init__(self):
        if self.span < 1:
            raise ValueError("window span must be positive")
        if self.kind is WindowKind.EXACT_PHRASE and self.span != 2:
            raise ValueError("exact_phrase windows have span 2")

    @classmethod
    def phrase(cls):
        return cls(WindowKind.EXACT_PHRASE, 2)

    @classmethod
    def ordered(cls, span):
        return cls(WindowKind.ORDERED, span)

    @classmethod
    def unordered(cls, span):
        return cls(WindowKind.UNORDERED, span)


@dataclass
class PostingList:
    term_id: int
    entries: list[tuple[int, np.ndarray]]


@dataclass
class CollectionStats:
    num_docs: int
    total_tokens: int
    cf: np.ndarray
    doc_lengths: np.ndarray


def ordered_pair_counts(keys_a: np.ndarray, keys_b: np.ndarray, span: int) -> np.ndarray:
    """For each key in ``keys_a``, the number of ``keys_b`` at offset 1..span-1."""
    if span < 2 or len(keys_a) == 0 or len(keys_b) == 0:
        return np.zeros(len(keys_a), dtype=np.int64)
    hi = np.searchsorted(keys_b, keys_a + (span - 1), side="right")
    lo = np.searchsorted(keys_b, keys_a, side="right")
    return hi - lo


def count_window(keys_a, keys_b, spec: WindowSpec, same_term: bool) -> int:
    if spec.kind is WindowKind.UNORDERED:
        n = int(ordered_pair_counts(keys_a, keys_b, spec.span).sum())
        if same_term:
            # each unordered pair of distinct positions is already counted once
            return n
        return n + int(ordered_pair_counts(keys_b, keys_a, spec.span).sum())
    return int(ordered_pair_counts(keys_a, keys_b, spec.span).sum())


class PositionalIndex:
    """Immutable positional index plus a forward (document -> terms) store."""

    def __init__(self, vocab: Vocabulary, doc_ids: list[str], forward: np.ndarray,
                 doc_offsets: np.ndarray, post_keys: np.ndarray, post_offsets: np.ndarray):
        self.vocab = vocab
        self.doc_ids = doc_ids
        self.forward = forward
        self.doc_offsets = doc_offsets
        self.post_keys = post_keys
        self.post_offsets = post_offsets
        lengths = np.diff(doc_offsets)
        cf = np.diff(post_offsets)
        self.stats = CollectionStats(len(doc_ids), int(lengths.sum()), cf, lengths)
        self._ordinal = {d: i for i, d in enumerate(doc_ids)}
        self._collection_cache: dict = {}
        self._df_cache: dict = {}
        self.manifest_hash: str | None = None
        self.meta: dict = {}

    # -- basic lookups -------------------------------------------------

    @property
    def num_docs(self):
        return self.stats.num_docs

    @property
    def total_tokens(self):
        return self.stats.total_tokens

    def cf(self, term: int) -> int:
        if term < 0 or term >= len(self.stats.cf):
            return 0
        return int(self.stats.cf[term])

    def doc_length(self, doc: int) -> int:
        return int(self.stats.doc_lengths[doc])

    def ordinal(self, external_id: str) -> int:
        return self._ordinal[external_id]

    def has_doc(self, external_id: str) -> bool:
        return external_id in self._ordinal

    def doc_terms(self, doc: int) -> np.ndarray:
        return self.forward[self.doc_offsets[doc]:self.doc_offsets[doc + 1]]

    def term_keys(self, term: int) -> np.ndarray:
        if term < 0 or term >= len(self.stats.cf):
            return _EMPTY
        return self.post_keys[self.post_offsets[term]:self.post_offsets[term + 1]]

    def _doc_keys(self, term, doc):
        keys = self.term_keys(term)
        base = np.int64(doc) << _SHIFT
        lo, hi = np.searchsorted(keys, [base, base + _MASK + 1])
        return keys[lo:hi]

    def positions(self, term: int, doc: int) -> np.ndarray:
        return self._doc_keys(term, doc) & _MASK

    def tf(self, term: int, doc: int) -> int:
        return len(self._doc_keys(term, doc))

    def docs_with(self, term: int) -> np.ndarray:
        return np.unique(self.term_keys(term) >> _SHIFT)

    def postings(self, term: int) -> PostingList:
        keys = self.term_keys(term)
        docs = keys >> _SHIFT
        cuts = np.flatnonzero(np.diff(docs)) + 1
        entries = [(int(chunk[0] >> _SHIFT), chunk & _MASK) for chunk in np.split(keys, cuts) if len(chunk)]
        return PostingList(term, entries)

    # -- window operators ----------------------------------------------

    def window_count(self, doc: int, a: int, b: int, spec: WindowSpec) -> int:
        return count_window(self._doc_keys(a, doc), self._doc_keys(b, doc), spec, a == b)

    def collection_window_count(self, a: int, b: int, spec: WindowSpec) -> int:
        key = (a, b, spec)
        hit = self._collection_cache.get(key)
        if hit is None:
            hit = count_window(self.term_keys(a), self.term_keys(b), spec, a == b)
            self._collection_cache[key] = hit
        return hit

    def pair_doc_freq(self, a: int, b: int, window: int) -> int:
        """Documents holding ``a`` followed by ``b`` within ``window`` positions."""
        key = (a, b, window)
        hit = self._df_cache.get(key)
        if hit is None:
            keys_a = self.term_keys(a)
            matched = keys_a[ordered_pair_counts(keys_a, self.term_keys(b), window) > 0]
            hit = len(np.unique(matched >> _SHIFT))
            self._df_cache[key] = hit
        return hit

    # -- persistence ---------------------------------------------------

    _ARRAYS = ("forward", "doc_offsets", "post_keys", "post_offsets")

    def save(self, directory, meta: dict | None = None) -> str:
        """Write the index to ``directory``; returns the manifest hash."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = {}
        for name in self._ARRAYS:
            path = directory / f"{name}.npy"
            np.save(path, getattr(self, name), allow_pickle=False)
            files[path.name] = _sha256(path)
        for name, lines in (("vocab.txt", self.vocab.terms), ("docids.txt", self.doc_ids)):
            path = directory / name
            path.write_text("".join(f"{x}\n" for x in lines), encoding="utf-8")
            files[name] = _sha256(path)
        manifest = {
            "format_version": FORMAT_VERSION,
            "num_docs": self.num_docs,
            "total_tokens": self.total_tokens,
            "vocab_size": len(self.vocab),
            "files": files,
            "meta": dict(meta or self.meta),
        }
        path = directory / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.manifest_hash = _sha256(path)
        return self.manifest_hash

    @classmethod
    def load(cls, directory) -> "PositionalIndex":
        directory = Path(directory)
        manifest_path = directory / "manifest.json"
        if not manifest_path.exists():
            raise IndexFormatError(f"no index manifest in {directory}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise IndexFormatError(f"unsupported index format {manifest.get('format_version')!r}")
        for name, digest in manifest["files"].items():
            if _sha256(directory / name) != digest:
                raise IndexFormatError(f"checksum mismatch for {name}")
        arrays = {n: np.load(directory / f"{n}.npy", allow_pickle=False) for n in cls._ARRAYS}
        vocab = Vocabulary(_read_lines(directory / "vocab.txt"))
        doc_ids = _read_lines(directory / "docids.txt")
        index = cls(vocab, doc_ids, **arrays)
        index.manifest_hash = _sha256(manifest_path)
        index.meta = manifest.get("meta", {})
        return index

    def extended(self, documents: Iterable[Document]) -> "PositionalIndex":
        """In-memory copy of this index with extra documents appended."""
        docs = [Document(self.doc_ids[d], self.doc_terms(d).tolist()) for d in range(self.num_docs)]
        return build_index(docs + list(documents), Vocabulary(self.vocab.terms))


def build_index(documents: Iterable[Document], vocab: Vocabulary | None = None) -> PositionalIndex:
    doc_ids = []
    chunks = []
    lengths = []
    for doc in documents:
        doc_ids.append(doc.external_id)
        chunks.append(np.asarray(doc.terms, dtype=np.int32))
        lengths.append(len(doc.terms))
    if not doc_ids:
        raise IndexFormatError("cannot build an index from zero documents")
    if len(set(doc_ids)) != len(doc_ids):
        raise IndexFormatError("duplicate document ids")
    forward = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int32)
    doc_offsets = np.zeros(len(doc_ids) + 1, dtype=np.int64)
    np.cumsum(lengths, out=doc_offsets[1:])
    if vocab is None:
        top = int(forward.max()) + 1 if len(forward) else 0
        vocab = Vocabulary(str(i) for i in range(top))
    if len(forward) and (forward.min() < 0 or forward.max() >= len(vocab)):
        raise IndexFormatError("document term ids outside the vocabulary")

    docs = np.repeat(np.arange(len(doc_ids), dtype=np.int64), lengths)
    pos = np.arange(len(forward), dtype=np.int64) - np.repeat(doc_offsets[:-1], lengths)
    keys = (docs << _SHIFT) | pos
    order = np.argsort(forward, kind="stable")
    post_keys = keys[order]
    post_offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
    np.cumsum(np.bincount(forward, minlength=len(vocab)), out=post_offsets[1:])
    return PositionalIndex(vocab, doc_ids, forward, doc_offsets, post_keys, post_offsets)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_lines(path):
    return Path(path).read_text(encoding="utf-8").splitlines()
