"""Predictive keyword extraction and boolean OR-query evaluation.

A regularized logistic regression is fit on a boolean doc-term matrix;
the terms with the largest positive coefficients are the empirically
predictive keywords. Keyword lists are sampled from that ranking with
probability proportional to coefficient size, then evaluated as boolean
OR queries over lowercased document tokens.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .corpus import LabeledCorpus
from .learn import minority_f1, stratified_fold_indices
from .textpipe import DocTermMatrix, Pipeline

log = logging.getLogger(__name__)


class NoSeparatingTerms(ValueError):
    """The fitted model found no positive-coefficient terms at all."""


@dataclass(frozen=True)
class PredictiveTerms:
    ranked: tuple[tuple[str, float], ...]  # descending by coefficient
    penalty: str  # 'l1' or 'l2'
    strength: float
    truncated: bool = False  # fewer positive terms than requested

    @property
    def terms(self) -> list[str]:
        return [t for t, _ in self.ranked]


@dataclass(frozen=True)
class KeywordList:
    terms: frozenset[str]
    provenance: str = "sampled"

    def __post_init__(self):
        if not self.terms:
            raise ValueError("keyword list is empty")
        if any(t != t.lower() for t in self.terms):
            raise ValueError("keywords must be lowercase")


# ------------------------------------------------------ logistic solvers

def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def fit_logistic_l2(X: sp.csr_matrix, y01: np.ndarray, strength: float,
                    tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """L2-penalized logistic regression, intercept unpenalized.

    Minimizes mean log-loss + strength/2 * ||w||^2 with a quasi-Newton
    gradient method.
    """
    n, dim = X.shape
    y = y01.astype(np.float64)

    def objective(wb):
        w, b = wb[:dim], wb[dim]
        f = X @ w + b
        # log(1 + exp(-t)) stably, with t = (2y-1) * f
        t = np.where(y == 1.0, f, -f)
        loss = np.logaddexp(0.0, -t).mean()
        p = _sigmoid(f)
        grad_f = (p - y) / n
        grad_w = X.T @ grad_f + strength * w
        grad_b = grad_f.sum()
        return loss + 0.5 * strength * (w @ w), np.append(grad_w, grad_b)

    res = minimize(objective, np.zeros(dim + 1), jac=True, method="L-BFGS-B",
                   options={"maxiter": 1000, "gtol": tol, "ftol": 1e-12})
    return res.x[:dim], float(res.x[dim])


def fit_logistic_l1(X: sp.csr_matrix, y01: np.ndarray, strength: float,
                    tol: float = 1e-6, max_outer: int = 60) -> tuple[np.ndarray, float]:
    """L1-penalized logistic regression by coordinate descent.

    Outer loop: quadratic approximation of the log-loss at the current
    point. Inner loop: cyclic coordinate descent with soft-thresholding
    on the weighted least-squares problem. Converges on the max
    coefficient change; the intercept is unpenalized.
    """
    X = X.tocsc()
    n, dim = X.shape
    y = y01.astype(np.float64)
    w = np.zeros(dim)
    b = 0.0
    f = np.zeros(n)
    col = [(X.indices[X.indptr[j]:X.indptr[j + 1]],
            X.data[X.indptr[j]:X.indptr[j + 1]]) for j in range(dim)]

    for _ in range(max_outer):
        p = _sigmoid(f)
        s = np.maximum(p * (1.0 - p), 1e-5)  # curvature floor
        z = f + (y - p) / s  # working response
        r = z - f  # residual of the quadratic model
        outer_delta = 0.0
        for _ in range(50):
            max_delta = 0.0
            for j in range(dim):
                rows, vals = col[j]
                if len(rows) == 0:
                    continue
                sv = s[rows] * vals
                denom = (sv @ vals) / n
                rho = (sv @ r[rows]) / n + denom * w[j]
                new_w = np.sign(rho) * max(abs(rho) - strength, 0.0) / denom
                delta = new_w - w[j]
                if delta != 0.0:
                    r[rows] -= delta * vals
                    w[j] = new_w
                    max_delta = max(max_delta, abs(delta))
            # intercept: unpenalized weighted mean of the residual
            db = (s @ r) / s.sum()
            if db != 0.0:
                r -= db
                b += db
                max_delta = max(max_delta, abs(db))
            outer_delta = max(outer_delta, max_delta)
            if max_delta < tol:
                break
        f = z - r
        if outer_delta < tol:
            break
    return w, float(b)


# -------------------------------------------------------------- fitting

DEFAULT_STRENGTHS = (1e-4, 1e-3, 1e-2, 1e-1)


def fit_predictive_model(dtm: DocTermMatrix, labels, penalties=("l1", "l2"),
                         strength_grid=DEFAULT_STRENGTHS, n_terms: int = 50,
                         seed: int = 0) -> PredictiveTerms:
    """Fit regularized logistic regression and rank predictive terms.

    The penalty/strength pair is chosen by held-out minority F1 on an
    internal stratified split, then the winning model is refit on the
    whole corpus. Returns the ``n_terms`` terms with the largest
    strictly positive coefficients (ties broken by vocabulary order);
    fewer than requested is flagged, zero raises.
    """
    if dtm.weighting != "boolean":
        raise ValueError("predictive terms are fit on a boolean-weighted DTM")
    if isinstance(penalties, str):
        penalties = (penalties,)
    y = np.asarray(labels, dtype=np.int8)
    X = dtm.matrix

    solvers = {"l1": fit_logistic_l1, "l2": fit_logistic_l2}
    best = None
    if len(penalties) * len(strength_grid) > 1:
        folds = stratified_fold_indices(y, 5, seed)
        held_out = folds == 0
        X_tr, y_tr = X[~held_out], y[~held_out]
        X_va, y_va = X[held_out], y[held_out]
        for penalty in penalties:
            for strength in strength_grid:
                w, b = solvers[penalty](X_tr, y_tr, strength)
                pred = ((X_va @ w + b) >= 0.0).astype(np.int8)
                f1 = minority_f1(pred, y_va)
                key = (0.0 if f1 is None else f1, -strength)
                if best is None or key > best[0]:
                    best = (key, penalty, strength)
        _, penalty, strength = best
    else:
        penalty, strength = penalties[0], strength_grid[0]

    w, _ = solvers[penalty](X, y, strength)

    order = np.lexsort((np.arange(len(w)), -w))
    ranked = [(dtm.vocab.terms[j], float(w[j])) for j in order if w[j] > 0.0]
    if not ranked:
        raise NoSeparatingTerms("model found no positively predictive terms")
    truncated = len(ranked) < n_terms
    if truncated:
        log.warning("only %d positive-coefficient terms available (wanted %d)",
                    len(ranked), n_terms)
    return PredictiveTerms(tuple(ranked[:n_terms]), penalty, strength, truncated)


def sample_keyword_lists(pt: PredictiveTerms, n_lists: int = 100,
                         list_size: int = 10, seed: int = 0) -> list[KeywordList]:
    """Sample keyword lists, term weight proportional to its coefficient.

    Sampling is without replacement within a list; lists may repeat.
    """
    terms = np.array([t for t, _ in pt.ranked])
    coefs = np.array([c for _, c in pt.ranked], dtype=np.float64)
    if list_size > np.count_nonzero(coefs):
        raise ValueError(
            f"cannot sample {list_size} distinct terms from "
            f"{np.count_nonzero(coefs)} positively weighted terms")
    p = coefs / coefs.sum()
    rng = np.random.default_rng(seed)
    lists = []
    for _ in range(n_lists):
        chosen = rng.choice(len(terms), size=list_size, replace=False, p=p)
        lists.append(KeywordList(frozenset(terms[chosen]), provenance="sampled"))
    return lists


# -------------------------------------------------------------- querying

# raw-match tokens: lowercased, no number/URL filtering
_MATCH_TOKEN_RE = re.compile(r"[#@]?\w(?:[\w.'-]*\w)?", re.UNICODE)


def match_tokens(text: str, lang: str = "en") -> set[str]:
    """Lowercased raw token set used for keyword matching.

    German gets the same diacritic stripping the tokenizer applies, so
    keywords extracted from the pipeline can actually match.
    """
    text = text.lower()
    if lang == "de":
        from .textpipe import _strip_diacritics
        text = _strip_diacritics(text)
    return set(_MATCH_TOKEN_RE.findall(text))


def corpus_token_sets(corpus: LabeledCorpus,
                      pipeline: Pipeline | None = None,
                      lang: str = "en") -> dict[str, frozenset]:
    """Per-document match-token sets, precomputed for repeated queries."""
    if pipeline is not None:
        return {d.id: frozenset(pipeline(d.text)) for d in corpus.docs}
    return {d.id: frozenset(match_tokens(d.text, lang)) for d in corpus.docs}


def boolean_query(keywords: KeywordList, corpus: LabeledCorpus,
                  pipeline: Pipeline | None = None,
                  token_sets: dict[str, frozenset] | None = None,
                  lang: str = "en") -> dict[str, int]:
    """OR-query: a document is relevant iff it contains >= 1 keyword.

    Matching is token-level exact match on lowercased raw tokens; pass a
    stemming ``pipeline`` to match on its output instead, or reuse
    ``token_sets`` from :func:`corpus_token_sets` when evaluating many
    lists against one corpus.
    """
    if token_sets is None:
        token_sets = corpus_token_sets(corpus, pipeline, lang)
    terms = set(keywords.terms)
    return {doc.id: int(not terms.isdisjoint(token_sets[doc.id]))
            for doc in corpus.docs}


def save_keyword_list(keywords: KeywordList, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(keywords.terms):
            fh.write(term + "\n")


def save_predictive_terms(pt: PredictiveTerms, path) -> None:
    """CSV of (rank, term, coefficient), best first."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rank,term,coefficient\n")
        for i, (term, coef) in enumerate(pt.ranked, start=1):
            fh.write(f"{i},{term},{coef!r}\n")
