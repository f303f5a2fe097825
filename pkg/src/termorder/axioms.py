"""Checker for the query-term-order constraint S(D2, Q) <= S(D1, Q).

D1 and D2 extend the same base document with the two query terms in query
order and in reverse order respectively.  Both are scored against an
in-memory copy of the collection that contains them, so every collection
statistic (including SITO) is computed end to end.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import plm, sdm
from .index import PositionalIndex, build_index
from .sito import Sito
from .synthetic import SEM_BUCKETS, OrderCorpus, PlantedPair, sem_bucket
from .text import Document

Scorer = Callable[[PositionalIndex, int, Sequence[int]], float]
EQUAL_TOL = 1e-12


@dataclass
class PerturbedPair:
    base_doc: list[int]
    d1: list[int]
    d2: list[int]
    gap: int
    q1: int
    q2: int


def make_pair(base_doc: Sequence[int], q1: int, q2: int, gap: int, pad: int | None,
              fillers: Sequence[int]) -> PerturbedPair:
    """Append ``pad, q1, fillers[:gap], q2`` (and the swapped form) to ``base_doc``.

    ``pad=None`` gives the literal adjacent append with no separator.
    """
    if q1 == q2:
        raise ValueError("q1 and q2 must differ for the order constraint to say anything")
    if gap < 0:
        raise ValueError("gap must be non-negative")
    if gap and not fillers:
        raise ValueError("need filler terms for a positive gap")
    fill = [fillers[i % len(fillers)] for i in range(gap)]
    head = list(base_doc) + ([pad] if pad is not None else [])
    return PerturbedPair(list(base_doc), head + [q1] + fill + [q2], head + [q2] + fill + [q1], gap, q1, q2)


def default_scorers(sdm_params: sdm.SdmParams | None = None, plm_params: plm.PlmParams | None = None,
                    names: Iterable[str] = ("sdm", "sdm-m", "plm", "plm-m")) -> dict[str, Scorer]:
    sp = sdm_params or sdm.SdmParams()
    pp = plm_params or plm.PlmParams()
    table = {
        "sdm": lambda ix, d, q: sdm.score_sdm(ix, d, q, sp),
        "sdm-m": lambda ix, d, q: sdm.score_sdm_m(ix, d, q, sp),
        "plm": lambda ix, d, q: plm.score_plm(ix, d, q, pp, "plm"),
        "plm-m": lambda ix, d, q: plm.score_plm(ix, d, q, pp, "plm_m"),
    }
    unknown = set(names) - set(table)
    if unknown:
        raise ValueError(f"unknown scorers: {sorted(unknown)}")
    return {n: table[n] for n in names}


@dataclass
class Trial:
    scorer: str
    shape: str
    gap: int
    sem: float
    s1: float
    s2: float
    padded: bool = True

    @property
    def satisfied(self) -> bool:
        return self.s2 <= self.s1 or self.equal

    @property
    def strict(self) -> bool:
        return self.s1 > self.s2 and not self.equal

    @property
    def equal(self) -> bool:
        return abs(self.s1 - self.s2) <= EQUAL_TOL * max(1.0, abs(self.s1), abs(self.s2))

    @property
    def bucket(self) -> str:
        return sem_bucket(self.sem)


def overlay(base: PositionalIndex | Sequence[Document], pair: PerturbedPair) -> tuple[PositionalIndex, int, int]:
    """Collection with D1 and D2 appended; returns the index and their ordinals."""
    extra = [Document("__axiom_d1__", pair.d1), Document("__axiom_d2__", pair.d2)]
    if isinstance(base, PositionalIndex):
        index = base.extended(extra)
    else:
        index = build_index(list(base) + extra)
    return index, index.num_docs - 2, index.num_docs - 1


def check_constraint(name: str, scorer: Scorer, base, pair: PerturbedPair, query: Sequence[int],
                     window: int = 4, shape: str = "pair", _overlay=None) -> Trial:
    index, n1, n2 = _overlay if _overlay is not None else overlay(base, pair)
    sem = Sito(index, window).sem(pair.q1, pair.q2)
    return Trial(name, shape, pair.gap, sem, scorer(index, n1, query), scorer(index, n2, query))


def query_for(pair: PlantedPair, shape: str) -> list[int]:
    if shape == "pair":
        return [pair.first, pair.second]
    if shape == "bridged":
        # the swapped terms sit two apart, so SDM-M's ordered-window
        # component (which skips adjacent query positions) sees them
        return [pair.first, pair.middle, pair.second]
    raise ValueError(f"unknown query shape {shape!r}")


@dataclass
class ConstraintReport:
    trials: list[Trial] = field(default_factory=list)

    def summary(self) -> dict[tuple, dict[str, float]]:
        groups = defaultdict(list)
        for t in self.trials:
            groups[(t.scorer, t.shape, t.gap, t.bucket, t.padded)].append(t)
        out = {}
        for key in sorted(groups):
            ts = groups[key]
            out[key] = {
                "n": len(ts),
                "satisfied": sum(t.satisfied for t in ts) / len(ts),
                "strict": sum(t.strict for t in ts) / len(ts),
                "equal": sum(t.equal for t in ts) / len(ts),
            }
        return out

    def select(self, **where) -> list[Trial]:
        return [t for t in self.trials if all(getattr(t, k) == v for k, v in where.items())]

    def to_tsv(self) -> str:
        lines = ["scorer\tshape\tpadded\tgap\tsem\ts1\ts2\tsatisfied"]
        for t in sorted(self.trials, key=lambda t: (t.scorer, t.shape, not t.padded, t.gap, t.sem, t.s1, t.s2)):
            lines.append(f"{t.scorer}\t{t.shape}\t{int(t.padded)}\t{t.gap}\t{t.sem:.6f}"
                         f"\t{t.s1:.12g}\t{t.s2:.12g}\t{int(t.satisfied)}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"{'scorer':<7} {'shape':<8} {'pad':<3} {'gap':>3} {'sem':<5} {'n':>4}"
                 f" {'satisfied':>9} {'strict':>7} {'equal':>7}"]
        for (scorer, shape, gap, bucket, padded), s in self.summary().items():
            lines.append(f"{scorer:<7} {shape:<8} {'yes' if padded else 'no':<3} {gap:>3} {bucket:<5} {s['n']:>4}"
                         f" {s['satisfied']:>9.3f} {s['strict']:>7.3f} {s['equal']:>7.3f}")
        return "\n".join(lines) + "\n"


def run_suite(scorers: dict[str, Scorer], corpus: OrderCorpus, trials: int, gaps: Iterable[int],
              seed: int = 0, window: int = 4, shapes: Sequence[str] = ("pair", "bridged"),
              padded: Sequence[bool] = (True,), base_len=(5, 30)) -> ConstraintReport:
    """Run ``trials`` randomized fixtures per gap, cycling through SITO buckets."""
    if not scorers:
        raise ValueError("need at least one scorer")
    rng = random.Random(seed)
    report = ConstraintReport()
    buckets = [b for b in SEM_BUCKETS if corpus.pairs_in(b)]
    if not buckets:
        raise ValueError("corpus has no planted pairs")
    gaps = list(gaps)
    for trial in range(trials):
        pair = rng.choice(corpus.pairs_in(buckets[trial % len(buckets)]))
        base = [rng.choice(corpus.fillers) for _ in range(rng.randint(*base_len))]
        fillers = [rng.choice(corpus.fillers) for _ in range(max(gaps, default=0))]
        for use_pad in padded:
            for gap in gaps:
                perturbed = make_pair(base, pair.first, pair.second, gap,
                                      corpus.pad if use_pad else None, fillers)
                ov = overlay(corpus.documents, perturbed)
                for shape in shapes:
                    query = query_for(pair, shape)
                    for name, scorer in scorers.items():
                        t = check_constraint(name, scorer, corpus.documents, perturbed, query,
                                             window, shape, _overlay=ov)
                        t.padded = use_pad
                        report.trials.append(t)
    return report


def corpus_from_index(index: PositionalIndex, seed: int = 0, pairs_per_bucket: int = 4,
                      sample_docs: int = 2000, window: int = 4) -> OrderCorpus:
    """Order corpus sampled from a real index.

    Query pairs are taken from adjacent term pairs in sampled documents and
    bucketed by their observed SITO value; fillers and the pad come from the
    remaining vocabulary.
    """
    rng = np.random.default_rng(seed)
    ordinals = np.sort(rng.choice(index.num_docs, size=min(sample_docs, index.num_docs), replace=False))
    docs = [Document(index.doc_ids[d], index.doc_terms(int(d)).tolist()) for d in ordinals]
    sample = build_index(docs, index.vocab)
    sito = Sito(sample, window)
    bigrams = sorted({(int(a), int(b)) for d in docs for a, b in zip(d.terms, d.terms[1:]) if a != b})
    rng.shuffle(bigrams)
    chosen: dict[str, list[PlantedPair]] = {b: [] for b in SEM_BUCKETS}
    used: set[int] = set()
    for a, b in bigrams:
        if a in used or b in used:
            continue
        bucket = sem_bucket(sito.sem(a, b))
        if len(chosen[bucket]) < pairs_per_bucket:
            chosen[bucket].append(PlantedPair(a, b, -1, sito.df(a, b), sito.df(b, a), bucket))
            used.update((a, b))
        if all(len(v) >= pairs_per_bucket for v in chosen.values()):
            break
    by_freq = np.argsort(-sample.stats.cf, kind="stable")
    common = [int(t) for t in by_freq if sample.stats.cf[t] > 0 and int(t) not in used]
    if len(common) < 3:
        raise ValueError("index vocabulary too small to sample fillers")
    middle, pad, fillers = common[0], common[1], common[2:202]
    pairs = [PlantedPair(p.first, p.second, middle, p.df_ab, p.df_ba, p.bucket)
             for bucket in SEM_BUCKETS for p in chosen[bucket]]
    return OrderCorpus(index.vocab, docs, pairs, fillers, pad)
