from collections import Counter

import pytest

from termorder import plm, sdm
from termorder.axioms import (
    ConstraintReport,
    Trial,
    check_constraint,
    corpus_from_index,
    default_scorers,
    make_pair,
    overlay,
    query_for,
    run_suite,
)
from termorder.index import WindowSpec, build_index
from termorder.synthetic import order_corpus, sem_bucket
from termorder.text import Document


@pytest.fixture(scope="module")
def corpus():
    return order_corpus(seed=2)


class TestMakePair:
    def test_gap_zero(self):
        p = make_pair([7, 8], 1, 2, 0, 9, [])
        assert p.d1 == [7, 8, 9, 1, 2]
        assert p.d2 == [7, 8, 9, 2, 1]

    def test_gap_one(self):
        p = make_pair([7], 1, 2, 1, 9, [5])
        assert p.d1 == [7, 9, 1, 5, 2]
        assert p.d2 == [7, 9, 2, 5, 1]

    def test_without_pad(self):
        assert make_pair([7], 1, 2, 0, None, []).d1 == [7, 1, 2]

    def test_window_boundary(self):
        # gap W-1 leaves the pair W positions apart: outside the ordered window
        p = make_pair([], 1, 2, 3, 9, [5])
        ix = build_index([Document("x", p.d1)])
        assert ix.window_count(0, 1, 2, WindowSpec.ordered(4)) == 0
        assert ix.window_count(0, 1, 2, WindowSpec.ordered(5)) == 1

    def test_invariants(self, rng):
        for _ in range(50):
            base = [rng.randrange(20) for _ in range(rng.randint(0, 15))]
            gap = rng.randint(0, 6)
            p = make_pair(base, 100, 101, gap, 99, [50, 51, 52])
            assert len(p.d1) == len(p.d2)
            assert Counter(p.d1) == Counter(p.d2)
            assert p.d1[:len(base)] == base == p.d2[:len(base)]

    def test_rejects_same_terms(self):
        with pytest.raises(ValueError):
            make_pair([1], 3, 3, 0, 9, [])

    def test_rejects_negative_gap(self):
        with pytest.raises(ValueError):
            make_pair([1], 3, 4, -1, 9, [5])


class TestCheckConstraint:
    def pair(self, corpus, bucket, gap):
        planted = corpus.pairs_in(bucket)[0]
        return planted, make_pair(corpus.fillers[:10], planted.first, planted.second, gap, corpus.pad,
                                  corpus.fillers[10:20])

    def test_plm_m_without_lambda_ties(self, corpus):
        planted, pp = self.pair(corpus, "high", 1)
        scorer = default_scorers(plm_params=plm.PlmParams(lam=0), names=["plm-m"])["plm-m"]
        t = check_constraint("plm-m", scorer, corpus.documents, pp, query_for(planted, "pair"))
        assert t.s1 == t.s2
        assert t.satisfied and not t.strict

    def test_baseline_sdm_ties(self, corpus):
        scorer = default_scorers(names=["sdm"])["sdm"]
        for gap in (1, 2, 3):
            planted, pp = self.pair(corpus, "high", gap)
            for shape in ("pair", "bridged"):
                t = check_constraint("sdm", scorer, corpus.documents, pp, query_for(planted, shape))
                assert t.equal

    def test_sdm_m_separates_high_sem(self, corpus):
        planted, pp = self.pair(corpus, "high", 1)
        scorer = default_scorers(names=["sdm-m"])["sdm-m"]
        t = check_constraint("sdm-m", scorer, corpus.documents, pp, query_for(planted, "bridged"))
        assert t.sem > 0.25
        assert t.s1 > t.s2

    def test_sem_read_from_overlay(self, corpus):
        planted, pp = self.pair(corpus, "low", 1)
        t = check_constraint("sdm", default_scorers(names=["sdm"])["sdm"], corpus.documents, pp,
                             query_for(planted, "pair"))
        ab, ba = planted.df_ab + 1, planted.df_ba + 1
        assert t.sem == pytest.approx(abs(ab - ba) / (2 * (ab + ba)))

    def test_overlay_from_index(self, corpus):
        planted, pp = self.pair(corpus, "zero", 0)
        base = build_index(corpus.documents)
        a = overlay(base, pp)
        b = overlay(corpus.documents, pp)
        q = query_for(planted, "pair")
        for name, scorer in default_scorers().items():
            assert scorer(a[0], a[1], q) == scorer(b[0], b[1], q)


def test_trial_flags():
    assert Trial("x", "pair", 0, 0.0, -1.0, -2.0).strict
    assert Trial("x", "pair", 0, 0.0, -1.0, -1.0 - 1e-15).equal
    assert not Trial("x", "pair", 0, 0.0, -2.0, -1.0).satisfied
    assert sem_bucket(0.0) == "zero" and sem_bucket(0.25) == "low" and sem_bucket(0.26) == "high"


class TestRunSuite:
    def test_zero_trials(self, corpus):
        assert run_suite(default_scorers(), corpus, 0, [1]).trials == []

    def test_needs_scorer(self, corpus):
        with pytest.raises(ValueError):
            run_suite({}, corpus, 1, [1])

    def test_deterministic(self, corpus):
        a = run_suite(default_scorers(), corpus, 6, [0, 1], seed=3)
        b = run_suite(default_scorers(), corpus, 6, [0, 1], seed=3)
        assert a.to_tsv() == b.to_tsv()
        assert a.to_text() == b.to_text()

    def test_modified_models_satisfy(self, corpus):
        report = run_suite(default_scorers(), corpus, 30, range(0, 3), seed=1, shapes=("pair", "bridged"))
        for t in report.trials:
            if t.bucket == "zero":
                continue
            if t.scorer == "plm-m" or (t.scorer == "sdm-m" and t.shape == "bridged"):
                assert t.strict, t
        for t in report.select(scorer="sdm"):
            if t.gap >= 1:
                assert t.equal

    def test_unpadded_variant(self, corpus):
        report = run_suite(default_scorers(names=["sdm-m"]), corpus, 3, [0], padded=(True, False))
        assert {t.padded for t in report.trials} == {True, False}

    def test_report_rates(self, corpus):
        report = run_suite(default_scorers(names=["plm", "plm-m"]), corpus, 9, [1])
        for stats in report.summary().values():
            assert 0.0 <= stats["satisfied"] <= 1.0

    def test_filler_identity_irrelevant(self, corpus):
        planted = corpus.pairs_in("high")[0]
        scorers = default_scorers()
        base = corpus.fillers[:8]
        verdicts = []
        for fill in ([corpus.fillers[20]], [corpus.fillers[40]], [corpus.fillers[77]]):
            pp = make_pair(base, planted.first, planted.second, 1, corpus.pad, fill)
            ts = [check_constraint(n, s, corpus.documents, pp, query_for(planted, "bridged"))
                  for n, s in scorers.items()]
            verdicts.append([(t.satisfied, t.strict) for t in ts])
        assert verdicts[0] == verdicts[1] == verdicts[2]


def test_corpus_from_index():
    oc = order_corpus(seed=4)
    ix = build_index(oc.documents, oc.vocab)
    sampled = corpus_from_index(ix, seed=0, pairs_per_bucket=2)
    assert sampled.pairs
    for p in sampled.pairs:
        assert p.first not in sampled.fillers and p.second not in sampled.fillers
    report = run_suite(default_scorers(names=["sdm", "plm-m"]), sampled, 4, [1])
    assert isinstance(report, ConstraintReport) and report.trials


def test_unknown_scorer():
    with pytest.raises(ValueError):
        default_scorers(names=["bm25"])
    with pytest.raises(ValueError):
        sdm.rank(build_index(order_corpus(seed=0).documents), [0], sdm.SdmParams(), variant="x")
