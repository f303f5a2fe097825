"""Positional language model (PLM) and the order-weighted PLM-M.

Each position ``i`` of a document defines a virtual document whose term
counts are Gaussian-kernel propagated from the real occurrences.  A
document is scored by its best virtual document under Dirichlet-smoothed
negative cross-entropy against the query.  PLM-M scales every query-term
occurrence by an order weight before propagation.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .index import PositionalIndex
from .sdm import ScoredDoc, candidates, top_k
from .sito import Sito

log = logging.getLogger(__name__)

BEST_MATCH = "best_match_positions"
ALL_POSITIONS = "all_positions"
_BLOCK_CELLS = 1 << 20


@dataclass(frozen=True)
class PlmParams:
    mu: float = 2500.0
    sigma: float = 175.0
    lam: float = 4.0
    window: int = 4
    position_strategy: str = BEST_MATCH

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if self.position_strategy not in (BEST_MATCH, ALL_POSITIONS):
            raise ValueError(f"unknown position strategy {self.position_strategy!r}")


@dataclass(frozen=True)
class PositionScore:
    position: int
    score: float


def kernel(i, j, sigma: float):
    """Gaussian propagation weight exp(-(i-j)^2 / (2 sigma^2))."""
    d = np.subtract(i, j, dtype=np.float64)
    return np.exp(-(d * d) / (2.0 * sigma * sigma))


def propagated_count(w: int, i: int, terms: Sequence[int], sigma: float) -> float:
    terms = np.asarray(terms)
    return float(kernel(i, np.flatnonzero(terms == w), sigma).sum())


def _order_pairs(query):
    """(x, y) such that x occurs before y somewhere in the query."""
    before = set()
    for a in range(len(query)):
        for b in range(a + 1, len(query)):
            before.add((query[a], query[b]))
    return before


def order_weight(j: int, terms: Sequence[int], query: Sequence[int], params: PlmParams,
                 sito: Sito, _before=None) -> float:
    terms = np.asarray(terms)
    w = int(terms[j])
    if w not in query:
        return 1.0
    before = _before if _before is not None else _order_pairs(query)
    lo = max(0, j - params.window + 1)
    hi = min(len(terms), j + params.window)
    total = 0.0
    for other in dict.fromkeys(query):
        if other == w:
            continue
        near = np.flatnonzero(terms[lo:hi] == other) + lo
        in_order = (((w, other) in before and bool((near > j).any()))
                    or ((other, w) in before and bool((near < j).any())))
        if in_order:
            total += params.lam * sito.sem(w, other)
    return 1.0 + total


def occurrence_weights(terms: np.ndarray, query: Sequence[int], params: PlmParams,
                       sito: Sito | None, weighted: bool) -> np.ndarray:
    weights = np.ones(len(terms), dtype=np.float64)
    if weighted:
        before = _order_pairs(query)
        for j in np.flatnonzero(np.isin(terms, list(set(query)))):
            weights[j] = order_weight(int(j), terms, query, params, sito, before)
    return weights


def weighted_propagated_count(w: int, i: int, terms: Sequence[int], query: Sequence[int],
                              params: PlmParams, sito: Sito) -> float:
    terms = np.asarray(terms)
    js = np.flatnonzero(terms == w)
    weights = np.array([order_weight(int(j), terms, query, params, sito) for j in js])
    return float(kernel(i, js, params.sigma) @ weights) if len(js) else 0.0


def _position_scores(index, terms, query, positions, params, weights):
    """Scores of the virtual documents at ``positions`` (vectorized)."""
    n = len(terms)
    qtf = Counter(query)
    qlen = len(query)
    scored = []
    for w, count in qtf.items():
        cf = index.cf(w)
        if cf == 0:
            continue
        scored.append((w, count / qlen, params.mu * cf / index.total_tokens, np.flatnonzero(terms == w)))
    out = np.zeros(len(positions), dtype=np.float64)
    if not scored:
        return out
    grid = np.arange(n, dtype=np.float64)
    step = max(1, _BLOCK_CELLS // max(n, 1))
    for start in range(0, len(positions), step):
        block = np.asarray(positions[start:start + step], dtype=np.float64)
        k = np.exp(-((block[:, None] - grid[None, :]) ** 2) / (2.0 * params.sigma ** 2))
        log_norm = np.log(k @ weights + params.mu)
        acc = np.zeros(len(block))
        for w, share, prior, js in scored:
            cw = k[:, js] @ weights[js] if len(js) else 0.0
            acc += share * (np.log(cw + prior) - log_norm)
        out[start:start + step] = acc
    return out


def _weights_for(index, terms, query, params, variant, sito):
    if variant not in ("plm", "plm_m"):
        raise ValueError(f"unknown PLM variant {variant!r}")
    if variant == "plm_m" and sito is None:
        sito = Sito(index, params.window)
    return occurrence_weights(terms, query, params, sito, variant == "plm_m")


def score_plm_at(index: PositionalIndex, terms: Sequence[int], query: Sequence[int], i: int,
                 params: PlmParams, variant: str = "plm", sito: Sito | None = None) -> float:
    terms = np.asarray(terms)
    weights = _weights_for(index, terms, query, params, variant, sito)
    return float(_position_scores(index, terms, list(query), [i], params, weights)[0])


def position_scores(index: PositionalIndex, terms: Sequence[int], query: Sequence[int],
                    params: PlmParams, variant: str = "plm", sito: Sito | None = None) -> list[PositionScore]:
    terms = np.asarray(terms)
    query = list(query)
    if params.position_strategy == ALL_POSITIONS:
        positions = np.arange(len(terms))
    else:
        positions = np.flatnonzero(np.isin(terms, query))
    weights = _weights_for(index, terms, query, params, variant, sito)
    scores = _position_scores(index, terms, query, positions, params, weights)
    return [PositionScore(int(p), float(s)) for p, s in zip(positions, scores)]


def score_terms(index: PositionalIndex, terms: Sequence[int], query: Sequence[int],
                params: PlmParams, variant: str = "plm", sito: Sito | None = None) -> float:
    """Best virtual-document score of an arbitrary term sequence."""
    scores = position_scores(index, terms, query, params, variant, sito)
    if not scores:
        raise ValueError("document holds no query term")
    return max(s.score for s in scores)


def score_plm(index: PositionalIndex, doc: int, query: Sequence[int], params: PlmParams,
              variant: str = "plm", sito: Sito | None = None) -> float:
    return score_terms(index, index.doc_terms(doc), query, params, variant, sito)


def rank(index: PositionalIndex, query: Sequence[int], params: PlmParams, k: int = 1000,
         variant: str = "plm") -> list[ScoredDoc]:
    query = list(query)
    if not query:
        log.warning("empty query after analysis; returning no results")
        return []
    sito = Sito(index, params.window)
    scores = {int(d): score_plm(index, int(d), query, params, variant, sito)
              for d in candidates(index, query)}
    return top_k(index, scores, k)
