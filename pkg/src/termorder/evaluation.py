"""TREC-style evaluation, paired t-tests and relevance/term-order association."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .index import PositionalIndex, WindowSpec
from .text import Query

log = logging.getLogger(__name__)

Qrels = dict[str, dict[str, int]]


class EvalFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunEntry:
    doc_id: str
    rank: int
    score: float
    tag: str


def read_qrels(path) -> Qrels:
    """Parse ``query_id iter doc_id grade`` lines."""
    qrels: Qrels = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 4:
            raise EvalFormatError(f"{path}:{lineno}: expected 4 fields in qrels line")
        qid, _, doc_id, grade = parts
        try:
            qrels.setdefault(qid, {})[doc_id] = int(grade)
        except ValueError:
            raise EvalFormatError(f"{path}:{lineno}: non-integer relevance grade {grade!r}") from None
    return qrels


def read_run(path) -> dict[str, list[RunEntry]]:
    """Parse ``query_id Q0 doc_id rank score tag`` lines, ordered by rank."""
    run: dict[str, list[RunEntry]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 6:
            raise EvalFormatError(f"{path}:{lineno}: expected 6 fields in run line")
        qid, _, doc_id, rank, score, tag = parts
        try:
            run.setdefault(qid, []).append(RunEntry(doc_id, int(rank), float(score), tag))
        except ValueError:
            raise EvalFormatError(f"{path}:{lineno}: bad rank or score") from None
    for entries in run.values():
        entries.sort(key=lambda e: e.rank)
    return run


def format_run_line(query_id: str, doc_id: str, rank: int, score: float, tag: str) -> str:
    return f"{query_id} Q0 {doc_id} {rank} {score:.10g} {tag}"


def write_run(fh, results: Mapping[str, Sequence], tag: str) -> int:
    """Write ``{query_id: [ScoredDoc, ...]}``; returns the number of lines."""
    n = 0
    for qid, docs in results.items():
        for rank, sd in enumerate(docs, 1):
            fh.write(format_run_line(qid, sd.external_id, rank, sd.score, tag) + "\n")
            n += 1
    return n


# -- metrics -----------------------------------------------------------


def average_precision(ranked_docs: Sequence[str], qrels_q: Mapping[str, int], cutoff: int = 1000) -> float:
    relevant = sum(1 for g in qrels_q.values() if g > 0)
    if relevant == 0:
        raise ValueError("average precision is undefined without relevant documents")
    hits = 0
    total = 0.0
    for k, doc in enumerate(ranked_docs[:cutoff], 1):
        if qrels_q.get(doc, 0) > 0:
            hits += 1
            total += hits / k
    return total / relevant


def precision_at(ranked_docs: Sequence[str], qrels_q: Mapping[str, int], k: int = 10) -> float:
    return sum(1 for doc in ranked_docs[:k] if qrels_q.get(doc, 0) > 0) / k


@dataclass
class TTestResult:
    t: float
    p: float
    n: int
    degenerate_variance: bool = False

    @property
    def significant_at_95(self) -> bool:
        return self.p < 0.05


def student_t_two_tailed(t: float, df: int) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-tailed paired t-test of ``a`` against ``b``."""
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    n = len(a)
    if n < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, n, degenerate_variance=True)
        return TTestResult(math.copysign(math.inf, mean), 0.0, n, degenerate_variance=True)
    t = float(mean / (sd / math.sqrt(n)))
    return TTestResult(t, student_t_two_tailed(t, n - 1), n)


@dataclass
class EvalReport:
    per_query: dict[str, dict[str, float]]
    map: float
    p10: float
    excluded: list[str] = field(default_factory=list)
    ttest_map: TTestResult | None = None
    ttest_p10: TTestResult | None = None

    @property
    def num_queries(self):
        return len(self.per_query)


def evaluate_run(run: Mapping[str, Sequence[RunEntry]], qrels: Qrels, cutoff: int = 1000,
                 k: int = 10) -> EvalReport:
    """Per-query AP / P@k and their means over queries with relevance data."""
    per_query = {}
    excluded = []
    for qid in sorted(run):
        judged = qrels.get(qid)
        if not judged or not any(g > 0 for g in judged.values()):
            log.warning("query %s has no relevant documents in qrels; excluded", qid)
            excluded.append(qid)
            continue
        docs = [e.doc_id for e in run[qid]]
        per_query[qid] = {"ap": average_precision(docs, judged, cutoff), "p10": precision_at(docs, judged, k)}
    if per_query:
        map_ = float(np.mean([m["ap"] for m in per_query.values()]))
        p10 = float(np.mean([m["p10"] for m in per_query.values()]))
    else:
        map_ = p10 = 0.0
    return EvalReport(per_query, map_, p10, excluded)


def compare(report: EvalReport, baseline: EvalReport) -> EvalReport:
    """Attach paired t-tests of ``report`` against ``baseline`` over shared queries."""
    shared = sorted(set(report.per_query) & set(baseline.per_query))
    if len(shared) >= 2:
        report.ttest_map = paired_ttest([report.per_query[q]["ap"] for q in shared],
                                        [baseline.per_query[q]["ap"] for q in shared])
        report.ttest_p10 = paired_ttest([report.per_query[q]["p10"] for q in shared],
                                        [baseline.per_query[q]["p10"] for q in shared])
    else:
        log.warning("fewer than two shared queries; no significance test")
    return report


def format_eval(report: EvalReport, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines.append("query\tAP\tP@10")
    for qid, m in report.per_query.items():
        lines.append(f"{qid}\t{m['ap']:.4f}\t{m['p10']:.4f}")
    map_star = p10_star = ""
    if report.ttest_map is not None:
        map_star = "*" if report.ttest_map.significant_at_95 else ""
        p10_star = "*" if report.ttest_p10.significant_at_95 else ""
    lines.append(f"all\t{report.map:.4f}{map_star}\t{report.p10:.4f}{p10_star}")
    lines.append(f"# queries={report.num_queries} excluded={len(report.excluded)}")
    for name, tt in (("MAP", report.ttest_map), ("P@10", report.ttest_p10)):
        if tt is not None:
            lines.append(f"# paired t-test {name}: t={tt.t:.4f} p={tt.p:.4g} n={tt.n}"
                         f" significant_at_95={tt.significant_at_95}"
                         + (" degenerate_variance=True" if tt.degenerate_variance else ""))
    return "\n".join(lines) + "\n"


# -- term order vs relevance -------------------------------------------


@dataclass
class PairAssociation:
    query_id: str
    term_a: int
    term_b: int
    rdf_ab: int
    rdf_ba: int

    @property
    def p_ordered(self) -> float:
        return self.rdf_ab / (self.rdf_ab + self.rdf_ba)

    @property
    def p_reversed(self) -> float:
        return self.rdf_ba / (self.rdf_ab + self.rdf_ba)


PAIRING_NOTE = "t-test pairs per term-pair p(Rel|ordered) with p(Rel|reversed)"


@dataclass
class OrderAssociationReport:
    window: int
    pairs: list[PairAssociation]
    p_ordered: float
    p_reversed: float
    ttest: TTestResult | None
    note: str = PAIRING_NOTE


def order_association(queries: Sequence[Query], qrels: Qrels, index: PositionalIndex,
                      window: int = 5) -> OrderAssociationReport:
    """Relevant-document frequency of query term pairs in and against query order."""
    spec = WindowSpec.ordered(window)
    pairs = []
    for query in queries:
        judged = qrels.get(query.query_id, {})
        relevant = [index.ordinal(d) for d, g in sorted(judged.items())
                    if g > 0 and index.has_doc(d)]
        seen = set()
        terms = query.terms
        for i in range(len(terms)):
            for j in range(i + 1, len(terms)):
                a, b = terms[i], terms[j]
                if a == b or (a, b) in seen:
                    continue
                seen.add((a, b))
                ab = sum(1 for d in relevant if index.window_count(d, a, b, spec) > 0)
                ba = sum(1 for d in relevant if index.window_count(d, b, a, spec) > 0)
                if ab + ba > 0:
                    pairs.append(PairAssociation(query.query_id, a, b, ab, ba))
    if not pairs:
        log.warning("no query term pair co-occurs in any relevant document")
        return OrderAssociationReport(window, [], 0.0, 0.0, None)
    ordered = [p.p_ordered for p in pairs]
    reversed_ = [p.p_reversed for p in pairs]
    ttest = paired_ttest(ordered, reversed_) if len(pairs) >= 2 else None
    return OrderAssociationReport(window, pairs, float(np.mean(ordered)), float(np.mean(reversed_)), ttest)


def format_order_association(report: OrderAssociationReport, vocab=None, header: Iterable[str] = ()) -> str:
    name = (lambda t: vocab.term(t)) if vocab is not None else str
    lines = [f"# {h}" for h in header]
    lines.append(f"# window={report.window}; {report.note}")
    lines.append("query\tterm_a\tterm_b\tRdf_ab\tRdf_ba\tp_ordered\tp_reversed")
    for p in report.pairs:
        lines.append(f"{p.query_id}\t{name(p.term_a)}\t{name(p.term_b)}\t{p.rdf_ab}\t{p.rdf_ba}"
                     f"\t{p.p_ordered:.6f}\t{p.p_reversed:.6f}")
    lines.append(f"# pairs={len(report.pairs)} p(Rel|ordered)={report.p_ordered:.4f}"
                 f" p(Rel|reversed)={report.p_reversed:.4f}")
    if report.ttest is not None:
        tt = report.ttest
        lines.append(f"# paired t-test: t={tt.t:.4f} p={tt.p:.4g} n={tt.n} significant_at_95={tt.significant_at_95}")
    return "\n".join(lines) + "\n"
