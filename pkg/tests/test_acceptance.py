"""Acceptance suite: one test per criterion, at the stated tolerances.

The Reuters reproduction runs only when a prepared corpus file is
available (see scripts/prepare_reuters.py); everything else is
self-contained and generates its own data.
"""

import math
import os
import random
import time
from pathlib import Path

import numpy as np
import pytest

from needle import embed, keywords, learn, topicrules
from needle.activeloop import (LoopConfig, SimulatedOracle, default_dtm,
                               mean_test_f1, run_loop, run_replications)
from needle.corpus import Document, LabeledCorpus, load_corpus, make_folds
from needle.metrics import Confusion, confusion, scores
from needle.textpipe import Pipeline, PruneSpec, build_dtm
from synthdata import separable_imbalanced_corpus

REUTERS_PATH = Path(os.environ.get("NEEDLE_REUTERS",
                                   "data/reuters_crude.jsonl"))


# ---------------------------------------------------------------- metrics

def test_metric_oracle_equivalence():
    """1,000 random prediction/truth pairs match a per-document tally."""
    rng = random.Random(99)
    start = time.perf_counter()
    undefined_hits = 0
    for _ in range(1000):
        n = rng.randint(5, 200)
        truth = {f"d{i}": rng.randint(0, 1) for i in range(n)}
        pred = {k: rng.choice([0, 0, 0, 1]) for k in truth}
        tp = sum(1 for k in truth if pred[k] and truth[k])
        fp = sum(1 for k in truth if pred[k] and not truth[k])
        fn = sum(1 for k in truth if not pred[k] and truth[k])
        tn = n - tp - fp - fn
        c = confusion(pred, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (tp, fp, fn, tn)
        s = scores(c)
        assert s.precision == (tp / (tp + fp) if tp + fp else None)
        assert s.recall == (tp / (tp + fn) if tp + fn else None)
        if s.f1 is None:
            undefined_hits += 1
            assert s.as_zero().f1 == 0.0
        else:
            p, r = s.precision, s.recall
            assert s.f1 == pytest.approx(2 * p * r / (p + r))
    # the UNDEFINED state must actually occur and render as zero
    all_neg = scores(confusion({"a": 0, "b": 0}, {"a": 1, "b": 0}))
    assert all_neg.precision is None and all_neg.as_zero().precision == 0.0
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"metric check took {elapsed:.2f}s"


# ---------------------------------------------------------- combinatorics

def test_combinatorics_and_full_sweep_runtime():
    """Subset counts exact per K; 426,725 total; 1,706,900 rows; < 5 min."""
    for k in topicrules.K_GRID:
        expected = sum(math.comb(k, m) for m in (1, 2, 3))
        assert topicrules.subset_count(k) == expected
    assert sum(topicrules.subset_count(k) for k in topicrules.K_GRID) == 426_725

    rng = np.random.default_rng(7)
    n_docs = 10_377
    doc_ids = tuple(f"d{i}" for i in range(n_docs))
    truth = {d: int(i % 18 == 0) for i, d in enumerate(doc_ids)}
    terms = tuple(f"t{j}" for j in range(20))

    start = time.perf_counter()
    total_rows = 0
    for k in topicrules.K_GRID:
        fit = topicrules.TopicModelFit(
            rng.dirichlet(np.ones(k), size=n_docs),
            rng.dirichlet(np.ones(len(terms)), size=k),
            doc_ids, terms, 1.0, 0.01, 0, 0)
        rows_here = 0

        def sink(row):
            nonlocal rows_here
            rows_here += 1

        summary, _ = topicrules.sweep_rules(fit, truth, row_sink=sink)
        assert rows_here == summary.n_rows == topicrules.subset_count(k) * 4
        total_rows += rows_here
    elapsed = time.perf_counter() - start
    assert total_rows == 1_706_900
    assert elapsed < 300.0, f"full sweep took {elapsed:.0f}s"


# -------------------------------------------------------------- rule math

def test_rule_math_matmul_and_monotonicity():
    """score_rule == dense theta @ C within 1e-12; monotone sweeps."""
    rng = np.random.default_rng(21)
    for trial in range(100):
        n_topics = int(rng.integers(2, 8))
        n_docs = int(rng.integers(3, 12))
        theta = rng.dirichlet(np.ones(n_topics), size=n_docs)
        beta = rng.dirichlet(np.ones(6), size=n_topics)
        fit = topicrules.TopicModelFit(
            theta, beta, tuple(f"d{i}" for i in range(n_docs)),
            tuple(f"t{j}" for j in range(6)), 1.0, 0.01, 0, trial)
        size = int(rng.integers(1, n_topics + 1))
        topics = frozenset(
            int(t) for t in rng.choice(n_topics, size=size, replace=False))
        c_vec = np.zeros(n_topics)
        c_vec[list(topics)] = 1.0
        dense = theta @ c_vec
        got = topicrules.score_rule(fit, topicrules.RelevanceRule(topics, 0.5))
        assert np.all(np.abs(got - dense) <= 1e-12)

    # monotonicity on every row of a complete sweep
    theta = rng.dirichlet(np.ones(6), size=80)
    fit = topicrules.TopicModelFit(
        theta, rng.dirichlet(np.ones(5), size=6),
        tuple(f"d{i}" for i in range(80)), tuple(f"t{j}" for j in range(5)),
        1.0, 0.01, 0, 0)
    truth = {d: int(i % 9 == 0) for i, d in enumerate(fit.doc_ids)}
    _, rows = topicrules.sweep_rules(fit, truth, collect_rows=True)
    by_key = {(r.topics, r.xi): r for r in rows}
    xi_grid = sorted({r.xi for r in rows})
    for r in rows:
        pos = r.confusion.tp + r.confusion.fp
        for xi2 in xi_grid:
            if xi2 > r.xi:
                higher = by_key[(r.topics, xi2)]
                assert higher.confusion.tp + higher.confusion.fp <= pos
                assert (higher.scores.recall or 0.0) <= (r.scores.recall or 0.0)
        if len(r.topics) < 3:
            for extra in range(6):
                if extra not in r.topics:
                    sup = by_key[(tuple(sorted(r.topics + (extra,))), r.xi)]
                    assert (sup.scores.recall or 0.0) >= (r.scores.recall or 0.0)


# ------------------------------------------------------ topic model sanity

def test_topic_model_two_topic_recovery():
    """90% top-term purity on a generated 2-topic corpus in under 30 s."""
    rng = np.random.default_rng(17)
    vocab_a = [f"aa{i:02d}" for i in range(50)]
    vocab_b = [f"bb{i:02d}" for i in range(50)]
    docs = []
    for i in range(500):
        source = vocab_a if i % 2 == 0 else vocab_b
        docs.append(Document(f"d{i}", " ".join(rng.choice(source, size=40)),
                             i % 2))
    corpus = LabeledCorpus(tuple(docs), name="two-topic")

    start = time.perf_counter()
    _, dtm = build_dtm(corpus, weighting="count")
    fit = topicrules.fit_lda(dtm, 2, iters=200, seed=5)
    elapsed = time.perf_counter() - start

    assert np.all(np.abs(fit.theta.sum(axis=1) - 1.0) <= 1e-9)
    assert np.all(np.abs(fit.beta.sum(axis=1) - 1.0) <= 1e-9)
    set_a, set_b = set(vocab_a), set(vocab_b)
    purities = []
    for k in range(2):
        top = set(topicrules.top_terms(fit, k, 10))
        purities.append(max(len(top & set_a), len(top & set_b)) / 10)
    assert min(purities) >= 0.9, f"purities {purities}"
    assert elapsed < 30.0, f"fit took {elapsed:.1f}s"


# ---------------------------------------------------- expansion properties

def test_expansion_recall_monotone_and_clique_cosines():
    corpus = separable_imbalanced_corpus(n_docs=1500, positive_share=0.12,
                                         seed=13)
    pipeline = Pipeline(lang="en")
    _, dtm = build_dtm(corpus, pipeline=pipeline,
                       prune=PruneSpec(min_doc_count=2, min_total_count=2),
                       weighting="boolean")
    pt = keywords.fit_predictive_model(dtm, corpus.labels(), penalties="l2",
                                       strength_grid=(1e-3,), seed=1)
    lists = keywords.sample_keyword_lists(pt, n_lists=100, list_size=10, seed=2)

    _, unigrams = build_dtm(corpus, pipeline=pipeline,
                            prune=PruneSpec(min_total_count=5),
                            weighting="count")
    table = embed.build_cooccurrence(corpus, unigrams.vocab, window=6,
                                     pipeline=pipeline)
    space = embed.train_glove(table, dim=24, epochs=25, seed=3)

    truth = corpus.truth()
    token_sets = keywords.corpus_token_sets(corpus)

    def recall_of(kw):
        pred = keywords.boolean_query(kw, corpus, token_sets=token_sets)
        return scores(confusion(pred, truth)).as_zero().recall

    for kw in lists:
        previous = kw
        prev_recall = recall_of(kw)
        for m in range(1, 10):
            expanded = embed.expand_query(kw, space, m)
            assert kw.terms <= expanded.terms          # superset, exact
            assert previous.terms <= expanded.terms    # grows with m
            r = recall_of(expanded)
            assert r >= prev_recall - 0.0              # no tolerance
            previous, prev_recall = expanded, r

    # clique corpus: within-clique similarity beats cross-clique
    rng = np.random.default_rng(4)
    cliques = [[f"cl{c}w{i}" for i in range(6)] for c in range(2)]
    docs = [Document(f"c{i}", " ".join(rng.choice(cliques[i % 2], size=10)),
                     i % 2) for i in range(400)]
    cl_corpus = LabeledCorpus(tuple(docs), name="cliques")
    _, cl_unigrams = build_dtm(cl_corpus, prune=PruneSpec(min_total_count=5),
                               weighting="count")
    cl_table = embed.build_cooccurrence(cl_corpus, cl_unigrams.vocab, window=6)
    cl_space = embed.train_glove(cl_table, dim=16, epochs=50, seed=6)
    within, cross = [], []
    for a in cliques[0]:
        for b in cliques[0]:
            if a < b:
                within.append(embed.cosine(cl_space, a, b))
        for b in cliques[1]:
            cross.append(embed.cosine(cl_space, a, b))
    for b in cliques[1]:
        for c in cliques[1]:
            if b < c:
                within.append(embed.cosine(cl_space, b, c))
    threshold = max(cross)
    ok = sum(1 for w in within if w > threshold)
    share = ok / len(within)
    assert share >= 0.95, f"only {share:.0%} of within-clique pairs dominate"


# --------------------------------------------------------------- resampling

def test_resampling_exact_counts_and_smote_envelope():
    rng = np.random.default_rng(31)
    import scipy.sparse as sp
    X = sp.csr_matrix(rng.random((400, 12)))
    y = np.array([1] * 40 + [0] * 360)
    X2, y2 = learn.resample(X, y, learn.ResamplePlan("oversample", 5.0, seed=1))
    assert int((y2 == 1).sum()) == 40 * 5
    assert int((y2 == 0).sum()) == 360

    X3, y3 = learn.resample(X, y, learn.ResamplePlan("smote", 4.0,
                                                     neighbors=5, seed=2))
    minority = X[:40].toarray()
    lo, hi = minority.min(axis=0), minority.max(axis=0)
    synthetic = X3[400:].toarray()
    assert synthetic.shape[0] == 40 * 4 - 40
    inside = (synthetic >= lo - 1e-12) & (synthetic <= hi + 1e-12)
    assert inside.all(), "SMOTE rows left the per-feature parent envelope"


# --------------------------------------------------- active-learning protocol

class _AuditOracle:
    def __init__(self, truth):
        self.truth = dict(truth)
        self.queried = []
        self.answers = {}

    def label(self, items):
        ids = [i.doc_id for i in items]
        self.queried.extend(ids)
        out = {d: self.truth[d] for d in ids}
        self.answers.update(out)
        return out


def test_active_learning_protocol_structure():
    """16 records, +50 per iteration, final 1,000; disjointness; truth labels."""
    corpus = separable_imbalanced_corpus(n_docs=3000, positive_share=0.1,
                                         seed=23)
    plan = make_folds(corpus, 3, stratified=False, seed=1)
    dtm = default_dtm(corpus)
    cfg = LoopConfig(init_size=250, batch_size=50, iterations=15,
                     mode="active", model_kind="svm", seed=9)
    oracle = _AuditOracle(corpus.truth())
    trace = run_loop(corpus, plan, 0, cfg, oracle, dtm)

    assert len(trace.records) == 16
    counts = [r.labeled_count for r in trace.records]
    assert counts == list(range(250, 1001, 50))
    assert counts[-1] == 1000

    # acquired ids unique, never from the test fold, oracle == ground truth
    assert len(oracle.queried) == len(set(oracle.queried)) == 1000
    test_ids = set(plan.fold_ids(0))
    assert not test_ids & set(oracle.queried)
    assert all(oracle.answers[d] == corpus.truth()[d] for d in oracle.queried)
    # (labeled/unlabeled disjointness is asserted inside every iteration
    # of run_loop itself; reaching here means it held for all 16 steps)


# ---------------------------------------------- active-vs-passive dominance

def test_active_dominates_passive_on_synthetic():
    corpus = separable_imbalanced_corpus(n_docs=10_000, positive_share=0.03,
                                         seed=41)
    assert abs(corpus.positive_share - 0.03) < 0.005
    plan = make_folds(corpus, 5, stratified=False, seed=2)
    dtm = default_dtm(corpus)

    start = time.perf_counter()
    results = {}
    for mode in ("active", "passive"):
        cfg = LoopConfig(init_size=250, batch_size=50, iterations=15,
                         mode=mode, model_kind="svm", oversample_factor=5.0,
                         seed=3)
        results[mode] = run_replications(corpus, plan, cfg, dtm=dtm)
    elapsed = time.perf_counter() - start

    active_final = mean_test_f1(results["active"])[-1]
    passive_final = mean_test_f1(results["passive"])[-1]
    assert active_final > passive_final, \
        f"active {active_final:.3f} <= passive {passive_final:.3f}"

    shares = [t.records[-1].positive_share for t in results["active"]]
    assert np.mean(shares) > corpus.positive_share
    assert elapsed < 300.0, f"dominance run took {elapsed:.0f}s"
    print(f"\n  active F1@1000 {active_final:.3f} vs passive "
          f"{passive_final:.3f}; active share {np.mean(shares):.3f} "
          f"vs corpus {corpus.positive_share:.3f} ({elapsed:.0f}s)")


# ----------------------------------------------- desk-scale Reuters (soft)

@pytest.mark.skipif(not REUTERS_PATH.exists(),
                    reason=f"Reuters corpus not found at {REUTERS_PATH}; "
                           "build it with scripts/prepare_reuters.py")
def test_reuters_reproduction_reported():
    """Soft reproduction: values reported, directional claims gated."""
    corpus = load_corpus(REUTERS_PATH, name="reuters-crude")
    n_pos = sum(d.label for d in corpus.docs)
    print(f"\n  corpus: {len(corpus)} docs, {n_pos} relevant "
          f"({corpus.positive_share:.4f})")

    # keyword lists
    pipeline = Pipeline(lang="en", stem=False)
    _, kw_dtm = build_dtm(corpus, pipeline=pipeline,
                          prune=PruneSpec(min_doc_count=5, min_total_count=5),
                          weighting="boolean")
    pt = keywords.fit_predictive_model(kw_dtm, corpus.labels(), seed=11)
    print(f"  top predictive terms: {[t for t, _ in pt.ranked[:5]]}")
    if "oil" not in pt.terms[:5]:
        print("  NOTE: 'oil' not among the top-5 predictive terms")
    lists = keywords.sample_keyword_lists(pt, 100, 10, seed=11)
    token_sets = keywords.corpus_token_sets(corpus)
    truth = corpus.truth()
    f1s = [scores(confusion(keywords.boolean_query(kw, corpus,
                                                   token_sets=token_sets),
                            truth)).as_zero().f1 for kw in lists]
    kw_max = max(f1s)
    print(f"  keywords: max F1 {kw_max:.3f} (paper 0.645 +/- 0.08), "
          f"spread {kw_max - min(f1s):.3f} (paper 0.381)")
    if not 0.645 - 0.08 <= kw_max <= 0.645 + 0.08:
        print("  NOTE: keyword max F1 outside the soft tolerance")

    # topic rules (reduced Gibbs budget keeps this desk-scale)
    iters = int(os.environ.get("NEEDLE_REUTERS_GIBBS_ITERS", "300"))
    _, tm_dtm = build_dtm(corpus, pipeline=Pipeline(lang="en", stem=True),
                          prune=PruneSpec(min_doc_count=5, min_total_count=5),
                          weighting="count")
    best_rule_f1 = 0.0
    for k in topicrules.K_GRID:
        fit = topicrules.fit_lda(tm_dtm, k, iters=iters, seed=11)
        summary, _ = topicrules.sweep_rules(fit, truth)
        for row in summary.top_rows:
            best_rule_f1 = max(best_rule_f1, row.scores.as_zero().f1)
        if k == 30:
            has_oil_topic = any("oil" in topicrules.top_terms(fit, t, 10)
                                for t in range(k))
            print(f"  K=30 has an 'oil' top-10 topic: {has_oil_topic}")
    print(f"  topic rules: best F1 {best_rule_f1:.3f} (paper 0.685 +/- 0.08)")
    if not 0.685 - 0.08 <= best_rule_f1 <= 0.685 + 0.08:
        print("  NOTE: topic-rule best F1 outside the soft tolerance")

    # supervised: active vs passive SVM over 5 folds
    _, sv_dtm = build_dtm(corpus, pipeline=Pipeline(lang="en", stem=True),
                          prune=PruneSpec(min_doc_count=3, min_total_count=3,
                                          min_tfidf_quantile=0.002),
                          weighting="boolean")
    plan = make_folds(corpus, 5, stratified=False, seed=11)
    finals = {}
    for mode in ("active", "passive"):
        cfg = LoopConfig(mode=mode, model_kind="svm", seed=11)
        traces = run_replications(corpus, plan, cfg, dtm=sv_dtm)
        finals[mode] = mean_test_f1(traces)[-1]
    print(f"  supervised: active {finals['active']:.3f} "
          f"(paper 0.849, gate >= 0.75), passive {finals['passive']:.3f}")

    # directional criteria gate; absolute values are reported above
    assert finals["active"] >= finals["passive"], "active < passive"
    assert finals["active"] > kw_max, "supervised <= keyword max"
    assert finals["active"] >= 0.75, "active mean F1 below 0.75 floor"
