"""Sequential dependence model (SDM) and its term-order aware variant SDM-M."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .index import PositionalIndex, WindowSpec
from .sito import Sito

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SdmParams:
    lambda_t: float = 0.85
    lambda_o: float = 0.10
    lambda_u: float = 0.05
    lambda_ow: float = 0.05
    mu: float = 2500.0
    window: int = 4
    unordered_span: int = 8

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if min(self.lambda_t, self.lambda_o, self.lambda_u, self.lambda_ow) < 0:
            raise ValueError("SDM weights must be non-negative")


@dataclass(frozen=True)
class ScoredDoc:
    doc: int
    external_id: str
    score: float


def dirichlet_log(tf: float, cf: float, total: float, doc_len: float, mu: float) -> float:
    """log[(tf + mu * cf/|C|) / (|D| + mu)]"""
    return math.log((tf + mu * cf / total) / (doc_len + mu))


def f_t(index: PositionalIndex, q: int, doc: int, params: SdmParams) -> float:
    cf = index.cf(q)
    if cf == 0:
        return 0.0
    return dirichlet_log(index.tf(q, doc), cf, index.total_tokens, index.doc_length(doc), params.mu)


def _f_window(index, a, b, doc, spec, params):
    cf = index.collection_window_count(a, b, spec)
    if cf == 0:
        return 0.0
    tf = index.window_count(doc, a, b, spec)
    return dirichlet_log(tf, cf, index.total_tokens, index.doc_length(doc), params.mu)


def f_o(index, a, b, doc, params: SdmParams) -> float:
    return _f_window(index, a, b, doc, WindowSpec.phrase(), params)


def f_u(index, a, b, doc, params: SdmParams) -> float:
    return _f_window(index, a, b, doc, WindowSpec.unordered(params.unordered_span), params)


def f_ow(index, a, b, doc, params: SdmParams) -> float:
    return _f_window(index, a, b, doc, WindowSpec.ordered(params.window), params)


def score_sdm(index: PositionalIndex, doc: int, query: Sequence[int], params: SdmParams) -> float:
    unigram = sum(f_t(index, q, doc, params) for q in query)
    pairs = list(zip(query, query[1:]))
    ordered = sum(f_o(index, a, b, doc, params) for a, b in pairs)
    unordered = sum(f_u(index, a, b, doc, params) for a, b in pairs)
    return params.lambda_t * unigram + params.lambda_o * ordered + params.lambda_u * unordered


def score_sdm_m(index: PositionalIndex, doc: int, query: Sequence[int], params: SdmParams,
                sito: Sito | None = None, neutral_weights: bool = False) -> float:
    """SDM-M score.

    ``neutral_weights`` replaces g and h by the constant 1; it exists so tests
    can check that SDM-M collapses to SDM.
    """
    sito = sito if sito is not None else Sito(index, params.window)
    if neutral_weights:
        g = h = lambda a, b: 1.0
    else:
        g, h = sito.g, sito.h
    unigram = sum(f_t(index, q, doc, params) for q in query)
    pairs = list(zip(query, query[1:]))
    ordered = sum(f_o(index, a, b, doc, params) * g(a, b) for a, b in pairs)
    unordered = sum(f_u(index, a, b, doc, params) * h(a, b) for a, b in pairs)
    windowed = sum(
        f_ow(index, query[i], query[j], doc, params) * g(query[i], query[j])
        for i in range(len(query))
        for j in range(i + 2, len(query))
    )
    return (params.lambda_t * unigram + params.lambda_o * ordered
            + params.lambda_u * unordered + params.lambda_ow * windowed)


def candidates(index: PositionalIndex, query: Sequence[int]) -> np.ndarray:
    lists = [index.docs_with(q) for q in set(query)]
    if not lists:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(lists))


def top_k(index: PositionalIndex, scores: dict[int, float], k: int) -> list[ScoredDoc]:
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], index.doc_ids[kv[0]]))
    return [ScoredDoc(d, index.doc_ids[d], s) for d, s in ranked[:k]]


def rank(index: PositionalIndex, query: Sequence[int], params: SdmParams, k: int = 1000,
         variant: str = "sdm", neutral_weights: bool = False) -> list[ScoredDoc]:
    """Score every candidate (docs holding >= 1 query term) and keep the best k."""
    query = list(query)
    if not query:
        log.warning("empty query after analysis; returning no results")
        return []
    if variant == "sdm":
        score = lambda d: score_sdm(index, d, query, params)
    elif variant == "sdm_m":
        sito = Sito(index, params.window)
        score = lambda d: score_sdm_m(index, d, query, params, sito, neutral_weights)
    else:
        raise ValueError(f"unknown SDM variant {variant!r}")
    return top_k(index, {int(d): score(int(d)) for d in candidates(index, query)}, k)
