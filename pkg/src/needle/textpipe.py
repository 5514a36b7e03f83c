"""Tokenization, stemming, vocabulary pruning, and sparse doc-term matrices.

This is the shared text substrate: keyword extraction, embedding
training, topic models and the linear classifiers all consume matrices
built here, differing only in pipeline/pruning/weighting options.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .corpus import LabeledCorpus
from .stemmers import german_stem, porter_stem

# Hashtags and @-handles stay single tokens; inner . ' - / survive so
# mixed alphanumerics like "9-13" are kept intact.
_TOKEN_RE = re.compile(r"[#@]?\w(?:[\w.'/-]*\w)?", re.UNICODE)
_URL_RE = re.compile(r"[a-z][a-z0-9+.-]*://\S*|www\.\S*")
_NUMBER_RE = re.compile(r"^[\d.,]+$")


def _strip_diacritics(text: str) -> str:
    text = text.replace("ß", "ss")
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def tokenize(text: str, lang: str = "en") -> list[str]:
    """Lowercased unigram tokens with punctuation/numbers/URLs removed.

    For German, diacritics are transliterated away (ä -> a etc.), which
    matches the downstream stemmer's expectations.
    """
    text = text.lower()
    if lang == "de":
        text = _strip_diacritics(text)
    text = _URL_RE.sub(" ", text)
    return [t for t in _TOKEN_RE.findall(text) if not _NUMBER_RE.match(t)]


def stem(tokens: list[str], lang: str = "en") -> list[str]:
    """Apply the language's suffix-stripping stemmer to lowercase tokens."""
    if lang == "en":
        return [porter_stem(t) for t in tokens]
    if lang == "de":
        return [german_stem(_strip_diacritics(t)) for t in tokens]
    raise ValueError(f"unsupported language {lang!r}")


@dataclass(frozen=True)
class Pipeline:
    """Tokenize options plus an optional stemming pass."""

    lang: str = "en"
    stem: bool = False

    def __call__(self, text: str) -> list[str]:
        tokens = tokenize(text, self.lang)
        if self.stem:
            tokens = stem(tokens, self.lang)
        return tokens


@dataclass(frozen=True)
class PruneSpec:
    min_doc_count: int = 1
    min_total_count: int = 1
    min_tfidf_quantile: float = 0.0


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: dict[str, int]
    index: dict[str, int] = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index",
                           {t: i for i, t in enumerate(self.terms)})
        if len(self.index) != len(self.terms):
            raise ValueError("vocabulary terms are not unique")

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


class EmptyVocabularyError(ValueError):
    pass


WEIGHTINGS = ("boolean", "count", "tfidf")


@dataclass(frozen=True, eq=False)
class DocTermMatrix:
    """Sparse documents x terms matrix with a fixed weighting scheme."""

    matrix: sp.csr_matrix
    vocab: Vocabulary
    doc_ids: tuple[str, ...]
    weighting: str

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.matrix.shape != (len(self.doc_ids), len(self.vocab)):
            raise ValueError("matrix shape does not match ids/vocabulary")

    @property
    def shape(self):
        return self.matrix.shape

    def row(self, i: int) -> sp.csr_matrix:
        return self.matrix.getrow(i)


def _count_matrix(corpus: LabeledCorpus, pipeline: Pipeline):
    """Raw term counts per document over the full (unpruned) vocabulary."""
    term_ids: dict[str, int] = {}
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for doc in corpus.docs:
        counts: dict[int, int] = {}
        for tok in pipeline(doc.text):
            tid = term_ids.setdefault(tok, len(term_ids))
            counts[tid] = counts.get(tid, 0) + 1
        indices.extend(counts.keys())
        data.extend(counts.values())
        indptr.append(len(indices))
    terms = list(term_ids)
    mat = sp.csr_matrix((np.asarray(data, dtype=np.float64),
                         np.asarray(indices, dtype=np.int64),
                         np.asarray(indptr, dtype=np.int64)),
                        shape=(len(corpus), len(terms)))
    mat.sort_indices()
    return mat, terms


def build_dtm(corpus: LabeledCorpus, pipeline: Pipeline = Pipeline(),
              prune: PruneSpec = PruneSpec(),
              weighting: str = "count") -> tuple[Vocabulary, DocTermMatrix]:
    """Build a pruned, weighted document-term matrix.

    Pruning drops terms occurring in fewer than ``min_doc_count``
    documents or fewer than ``min_total_count`` times overall, then
    drops the terms whose mean tf-idf (over the documents containing
    them) falls in the lowest ``min_tfidf_quantile`` share of surviving
    terms. tf-idf is raw count times ln(N/df).
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    counts, terms = _count_matrix(corpus, pipeline)
    n_docs = counts.shape[0]

    df = np.asarray((counts > 0).sum(axis=0)).ravel()
    total = np.asarray(counts.sum(axis=0)).ravel()
    keep = (df >= prune.min_doc_count) & (total >= prune.min_total_count)

    if prune.min_tfidf_quantile > 0 and keep.any():
        idf = np.log(n_docs / np.maximum(df, 1))
        # mean tf-idf of each term across the documents containing it
        mean_tfidf = np.where(df > 0, total * idf / np.maximum(df, 1), 0.0)
        kept = np.flatnonzero(keep)
        # rank-based cut so ties at the cutoff cannot wipe the vocabulary;
        # ties broken by column order for determinism
        n_drop = int(math.floor(prune.min_tfidf_quantile * len(kept)))
        if n_drop:
            order = kept[np.lexsort((kept, mean_tfidf[kept]))]
            keep[order[:n_drop]] = False

    if not keep.any():
        raise EmptyVocabularyError("pruning removed the entire vocabulary")

    kept_idx = np.flatnonzero(keep)
    counts = counts[:, kept_idx].tocsr()
    kept_terms = tuple(terms[i] for i in kept_idx)
    vocab = Vocabulary(kept_terms,
                       {t: int(df[i]) for t, i in zip(kept_terms, kept_idx)})

    if weighting == "count":
        mat = counts
    elif weighting == "boolean":
        mat = counts.copy()
        mat.data = np.ones_like(mat.data)
    elif weighting == "tfidf":
        df_kept = df[kept_idx]
        idf = np.log(n_docs / df_kept)
        mat = counts.multiply(idf[np.newaxis, :]).tocsr()
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    mat.eliminate_zeros()

    return vocab, DocTermMatrix(mat, vocab, tuple(corpus.ids), weighting)


def save_dtm(dtm: DocTermMatrix, path) -> None:
    """Write a `row col value` triplet file with a vocabulary sidecar."""
    coo = dtm.matrix.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# weighting={dtm.weighting} docs={len(dtm.doc_ids)} "
                 f"terms={len(dtm.vocab)}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v!r}\n")
    with open(f"{path}.vocab", "w", encoding="utf-8") as fh:
        for term in dtm.vocab.terms:
            fh.write(term + "\n")


def mean_tfidf(counts: sp.csr_matrix) -> np.ndarray:
    """Mean tf-idf per term over the docs containing it (diagnostics)."""
    n_docs = counts.shape[0]
    df = np.asarray((counts > 0).sum(axis=0)).ravel()
    total = np.asarray(counts.sum(axis=0)).ravel()
    idf = np.log(n_docs / np.maximum(df, 1))
    return np.where(df > 0, total * idf / np.maximum(df, 1), 0.0)
