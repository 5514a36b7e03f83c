"""Topic-model classification rules: estimation, term rankings, rule sweeps.

A topic model fit is two stochastic matrices: doc-topic shares (theta)
and topic-term probabilities (beta). A relevance rule picks a set of
topics and a threshold xi; a document is retrieved when the summed
share of its words falling on the chosen topics reaches xi. The sweep
evaluates every rule with 1-3 relevant topics over a grid of topic
counts and thresholds.

Estimation here is LDA by collapsed Gibbs sampling; the rule machinery
only needs the two matrices, so any estimator producing them plugs in.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass

import numba
import numpy as np

from .metrics import Confusion, Scores, scores

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TopicModelFit:
    theta: np.ndarray  # docs x K, rows sum to 1
    beta: np.ndarray   # K x terms, rows sum to 1
    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]
    alpha: float
    eta: float
    iterations: int
    seed: int

    def __post_init__(self):
        if self.theta.shape[1] != self.beta.shape[0]:
            raise ValueError("theta/beta topic dimensions disagree")
        if self.theta.shape[0] != len(self.doc_ids):
            raise ValueError("theta rows do not match doc ids")
        if self.beta.shape[1] != len(self.terms):
            raise ValueError("beta columns do not match terms")
        for name, m in (("theta", self.theta), ("beta", self.beta)):
            if np.any(m <= 0.0):
                raise ValueError(f"{name} entries must be strictly positive")
            if np.any(np.abs(m.sum(axis=1) - 1.0) > 1e-9):
                raise ValueError(f"{name} rows must sum to 1")

    @property
    def n_topics(self) -> int:
        return self.theta.shape[1]


@dataclass(frozen=True)
class RelevanceRule:
    relevant_topics: frozenset[int]
    xi: float

    def __post_init__(self):
        if not self.relevant_topics:
            raise ValueError("rule needs at least one relevant topic")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError("xi must lie in [0, 1]")

    def validate_for(self, fit: TopicModelFit) -> None:
        if max(self.relevant_topics) >= fit.n_topics or min(self.relevant_topics) < 0:
            raise ValueError("rule names topics outside the fit")


K_GRID = (5, 15, 30, 50, 70, 90, 110)
XI_GRID = (0.1, 0.3, 0.5, 0.7)


# ------------------------------------------------------------ estimation

@numba.njit(cache=True)
def _gibbs_sweeps(doc_of, term_of, z, n_dk, n_kw, n_k, alpha, eta, iters, seed):
    np.random.seed(seed)
    n_topics = n_dk.shape[1]
    n_terms = n_kw.shape[1]
    cum = np.empty(n_topics)
    for _ in range(iters):
        for t in range(doc_of.shape[0]):
            d = doc_of[t]
            w = term_of[t]
            k = z[t]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                total += ((n_dk[d, kk] + alpha) * (n_kw[kk, w] + eta)
                          / (n_k[kk] + n_terms * eta))
                cum[kk] = total
            u = np.random.random() * total
            k = np.searchsorted(cum, u, side="right")
            if k >= n_topics:
                k = n_topics - 1
            z[t] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1


def fit_lda(dtm, n_topics: int, alpha: float | None = None, eta: float = 0.01,
            iters: int = 1000, seed: int = 0) -> TopicModelFit:
    """Collapsed-Gibbs LDA on a count-weighted doc-term matrix.

    Returns smoothed posterior means from the final sampler state:
    theta = (n_dk + alpha) / (n_d + K alpha), beta analogous with eta.
    alpha defaults to 50/K. Deterministic under the seed.
    """
    if n_topics < 2:
        raise ValueError("need at least 2 topics")
    if dtm.weighting != "count":
        raise ValueError("LDA expects a count-weighted DTM")
    if alpha is None:
        alpha = 50.0 / n_topics

    mat = dtm.matrix.tocoo()
    reps = mat.data.astype(np.int64)
    doc_of = np.repeat(mat.row.astype(np.int64), reps)
    term_of = np.repeat(mat.col.astype(np.int64), reps)
    n_docs, n_terms = dtm.shape

    empty = np.flatnonzero(np.diff(dtm.matrix.indptr) == 0)
    if len(empty):
        log.warning("%d empty documents get a uniform topic row", len(empty))

    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_topics, size=doc_of.shape[0])
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int64)
    n_kw = np.zeros((n_topics, n_terms), dtype=np.int64)
    np.add.at(n_dk, (doc_of, z), 1)
    np.add.at(n_kw, (z, term_of), 1)
    n_k = n_kw.sum(axis=1)

    _gibbs_sweeps(doc_of, term_of, z, n_dk, n_kw, n_k,
                  float(alpha), float(eta), int(iters), int(seed))

    theta = (n_dk + alpha) / (n_dk.sum(axis=1, keepdims=True) + n_topics * alpha)
    beta = (n_kw + eta) / (n_k[:, None] + n_terms * eta)
    return TopicModelFit(theta, beta, dtm.doc_ids, dtm.vocab.terms,
                         float(alpha), float(eta), int(iters), int(seed))


def save_fit(fit: TopicModelFit, path) -> None:
    """Dense binary matrices plus a JSON header sidecar."""
    np.savez_compressed(path, theta=fit.theta, beta=fit.beta)
    header = {"n_topics": fit.n_topics, "alpha": fit.alpha, "eta": fit.eta,
              "iterations": fit.iterations, "seed": fit.seed,
              "doc_ids": list(fit.doc_ids), "terms": list(fit.terms)}
    with open(f"{path}.json", "w", encoding="utf-8") as fh:
        json.dump(header, fh, sort_keys=True)


def load_fit(path) -> TopicModelFit:
    arrays = np.load(path if str(path).endswith(".npz") else f"{path}.npz")
    with open(f"{str(path).removesuffix('.npz')}.json", encoding="utf-8") as fh:
        header = json.load(fh)
    return TopicModelFit(arrays["theta"], arrays["beta"],
                         tuple(header["doc_ids"]), tuple(header["terms"]),
                         header["alpha"], header["eta"], header["iterations"],
                         header["seed"])


# ---------------------------------------------------------- term rankings

def _ecdf(values: np.ndarray) -> np.ndarray:
    """Empirical CDF of each value within its own vector (ties count <=)."""
    order = np.sort(values)
    return np.searchsorted(order, values, side="right") / len(values)


def exclusivity(fit: TopicModelFit) -> np.ndarray:
    """beta normalized by each term's probability mass over all topics."""
    return fit.beta / fit.beta.sum(axis=0, keepdims=True)


def frex(fit: TopicModelFit, omega: float = 0.5) -> np.ndarray:
    """Weighted harmonic mean of within-topic exclusivity and frequency ranks.

    Both ranks are ECDFs taken over the terms of one topic. omega
    weights exclusivity, 1-omega weights frequency.
    """
    excl = exclusivity(fit)
    out = np.empty_like(fit.beta)
    for k in range(fit.n_topics):
        ecdf_excl = _ecdf(excl[k])
        ecdf_prob = _ecdf(fit.beta[k])
        out[k] = 1.0 / (omega / ecdf_excl + (1.0 - omega) / ecdf_prob)
    return out


def top_terms(fit: TopicModelFit, topic: int, n: int = 10,
              ranking: str = "probability", omega: float = 0.5) -> list[str]:
    """Highest-ranked terms of one topic under the chosen ranking."""
    if not 0 <= topic < fit.n_topics:
        raise ValueError("topic index out of range")
    if ranking == "probability":
        values = fit.beta[topic]
    elif ranking == "exclusivity":
        values = exclusivity(fit)[topic]
    elif ranking == "frex":
        values = frex(fit, omega)[topic]
    else:
        raise ValueError(f"unknown ranking {ranking!r}")
    order = np.lexsort((np.arange(len(values)), -values))
    return [fit.terms[j] for j in order[:n]]


# ------------------------------------------------------------------ rules

def score_rule(fit: TopicModelFit, rule: RelevanceRule) -> np.ndarray:
    """Per-document share of words coming from the rule's topics."""
    rule.validate_for(fit)
    cols = sorted(rule.relevant_topics)
    return fit.theta[:, cols].sum(axis=1)


def classify_rule(fit: TopicModelFit, rule: RelevanceRule) -> dict[str, int]:
    """Documents with score >= xi (inclusive) are predicted relevant."""
    r = score_rule(fit, rule)
    hit = r >= rule.xi
    return {doc_id: int(h) for doc_id, h in zip(fit.doc_ids, hit)}


# ------------------------------------------------------------------ sweep

def rule_subsets(n_topics: int, max_relevant: int = 3):
    """All topic subsets of size 1..max_relevant, in deterministic order."""
    for size in range(1, max_relevant + 1):
        yield from itertools.combinations(range(n_topics), size)


def subset_count(n_topics: int, max_relevant: int = 3) -> int:
    return sum(math.comb(n_topics, m) for m in range(1, max_relevant + 1))


@numba.njit(cache=True, parallel=True)
def _sweep_counts(theta_t, combos, xi_grid, truth, tp_out, pp_out):
    n_combos = combos.shape[0]
    n_docs = theta_t.shape[1]
    n_xi = xi_grid.shape[0]
    for ci in numba.prange(n_combos):
        a = combos[ci, 0]
        b = combos[ci, 1]
        c = combos[ci, 2]
        for m in range(n_xi):
            tp_out[ci, m] = 0
            pp_out[ci, m] = 0
        for i in range(n_docs):
            r = theta_t[a, i]
            if b >= 0:
                r += theta_t[b, i]
            if c >= 0:
                r += theta_t[c, i]
            for m in range(n_xi):
                if r >= xi_grid[m]:
                    pp_out[ci, m] += 1
                    if truth[i]:
                        tp_out[ci, m] += 1
                else:
                    break  # xi_grid ascending: higher thresholds fail too
    return tp_out


@dataclass(frozen=True)
class SweepRow:
    n_topics: int
    topics: tuple[int, ...]
    xi: float
    confusion: Confusion
    scores: Scores


@dataclass(frozen=True)
class SweepSummary:
    n_topics: int
    n_subsets: int
    n_rows: int
    top_rows: tuple[SweepRow, ...]  # all xi rows for the best two subsets


def sweep_rules(fit: TopicModelFit, truth: dict[str, int],
                xi_grid=XI_GRID, max_relevant: int = 3,
                row_sink=None, collect_rows: bool = False):
    """Evaluate every 1..max_relevant topic subset at every threshold.

    Scores every combination by summing precomputed theta columns (one
    pass per combination, thresholds checked together). Rows stream to
    ``row_sink`` if given; the summary reports the two subsets with the
    best F1 (ties to higher recall, then lexicographic subset order).
    Returns (summary, rows) where rows is empty unless ``collect_rows``.
    """
    xi_sorted = np.array(sorted(xi_grid), dtype=np.float64)
    truth_vec = np.array([truth[d] for d in fit.doc_ids], dtype=np.bool_)
    n_pos = int(truth_vec.sum())

    combos = np.full((subset_count(fit.n_topics, max_relevant), 3), -1,
                     dtype=np.int64)
    for ci, subset in enumerate(rule_subsets(fit.n_topics, max_relevant)):
        combos[ci, :len(subset)] = subset

    theta_t = np.ascontiguousarray(fit.theta.T)
    tp = np.zeros((len(combos), len(xi_sorted)), dtype=np.int64)
    pp = np.zeros_like(tp)
    _sweep_counts(theta_t, combos, xi_sorted, truth_vec, tp, pp)

    n_docs = len(fit.doc_ids)
    with np.errstate(divide="ignore", invalid="ignore"):
        prec = np.where(pp > 0, tp / np.maximum(pp, 1), np.nan)
        rec = tp / n_pos if n_pos else np.full_like(prec, np.nan)
        pr = prec + rec
        f1 = np.where(np.isnan(prec) | np.isnan(rec) | (pr == 0), np.nan,
                      2.0 * prec * rec / np.where(pr == 0, 1, pr))
    f1_zero = np.nan_to_num(f1, nan=0.0)
    rec_zero = np.nan_to_num(rec, nan=0.0)

    def build_row(ci: int, m: int) -> SweepRow:
        subset = tuple(int(t) for t in combos[ci] if t >= 0)
        c = Confusion(int(tp[ci, m]), int(pp[ci, m] - tp[ci, m]),
                      n_pos - int(tp[ci, m]),
                      n_docs - int(pp[ci, m]) - (n_pos - int(tp[ci, m])))
        return SweepRow(fit.n_topics, subset, float(xi_sorted[m]), c, scores(c))

    rows = []
    if row_sink is not None or collect_rows:
        for ci in range(len(combos)):
            for m in range(len(xi_sorted)):
                row = build_row(ci, m)
                if row_sink is not None:
                    row_sink(row)
                if collect_rows:
                    rows.append(row)

    best_m = np.argmax(f1_zero, axis=1)
    take = np.arange(len(combos))
    combo_key = list(zip(f1_zero[take, best_m], rec_zero[take, best_m]))
    order = sorted(range(len(combos)),
                   key=lambda ci: (-combo_key[ci][0], -combo_key[ci][1],
                                   tuple(combos[ci])))
    top_rows = tuple(build_row(ci, m)
                     for ci in order[:2] for m in range(len(xi_sorted)))
    summary = SweepSummary(fit.n_topics, len(combos),
                           len(combos) * len(xi_sorted), top_rows)
    return summary, rows
