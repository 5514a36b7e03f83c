"""Word embeddings: local training, external loading, and query expansion.

Local embeddings are trained on weighted co-occurrence counts with the
classic global-vectors least-squares objective under AdaGrad; word and
context matrices are summed after training. Expansion appends each
keyword's top-M cosine neighbors.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp

from .corpus import LabeledCorpus
from .keywords import KeywordList
from .textpipe import Pipeline, Vocabulary

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, loss):
        super().__init__(f"embedding loss diverged (final loss {loss})")
        self.loss = loss


@dataclass(frozen=True, eq=False)
class EmbeddingSpace:
    terms: tuple[str, ...]
    matrix: np.ndarray  # len(terms) x dim
    source: str
    trained: bool = True
    index: dict[str, int] = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index",
                           {t: i for i, t in enumerate(self.terms)})
        if self.matrix.shape[0] != len(self.terms):
            raise ValueError("matrix rows do not match terms")
        norms = np.linalg.norm(self.matrix, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("all-zero vectors are not allowed in a space")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def vector(self, term: str) -> np.ndarray:
        return self.matrix[self.index[term]]

    def restrict(self, keep_terms) -> "EmbeddingSpace":
        """Sub-space containing only the given terms (missing ones skipped)."""
        kept = [t for t in self.terms if t in set(keep_terms)]
        rows = [self.index[t] for t in kept]
        return EmbeddingSpace(tuple(kept), self.matrix[rows], self.source,
                              self.trained)


@dataclass(frozen=True, eq=False)
class CooccurrenceTable:
    """Symmetric sparse term-term matrix of distance-weighted counts."""

    matrix: sp.csr_matrix
    terms: tuple[str, ...]

    def value(self, a: str, b: str) -> float:
        ia, ib = self.terms.index(a), self.terms.index(b)
        return float(self.matrix[ia, ib])


def build_cooccurrence(corpus: LabeledCorpus, vocab: Vocabulary,
                       window: int = 6,
                       pipeline: Pipeline = Pipeline()) -> CooccurrenceTable:
    """Distance-weighted co-occurrence counts within a symmetric window.

    Each ordered token pair at distance q <= window inside one document
    adds 1/q to both (i, j) and (j, i). Out-of-vocabulary tokens still
    occupy positions, so distances refer to the original token sequence.
    """
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    ids: list[int] = []
    sep = [-1] * window
    for doc in corpus.docs:
        ids.extend(vocab.index.get(tok, -1) for tok in pipeline(doc.text))
        ids.extend(sep)
    seq = np.asarray(ids, dtype=np.int64)

    rows, cols, vals = [], [], []
    for q in range(1, window + 1):
        a, b = seq[:-q], seq[q:]
        ok = (a >= 0) & (b >= 0)
        rows.append(a[ok])
        cols.append(b[ok])
        vals.append(np.full(int(ok.sum()), 1.0 / q))
    u = len(vocab)
    half = sp.coo_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(u, u)).tocsr()
    full = (half + half.T).tocsr()
    full.sum_duplicates()
    return CooccurrenceTable(full, vocab.terms)


@numba.njit(cache=True)
def _adagrad_epoch(rows, cols, logx, fw, w, c, bw, bc,
                   gw, gc, gbw, gbc, lr, order):
    total = 0.0
    dim = w.shape[1]
    for n in order:
        i, j = rows[n], cols[n]
        inner = bw[i] + bc[j] - logx[n]
        for d in range(dim):
            inner += w[i, d] * c[j, d]
        fdiff = fw[n] * inner
        total += 0.5 * fdiff * inner
        for d in range(dim):
            gwi = fdiff * c[j, d]
            gcj = fdiff * w[i, d]
            w[i, d] -= lr * gwi / math.sqrt(gw[i, d])
            c[j, d] -= lr * gcj / math.sqrt(gc[j, d])
            gw[i, d] += gwi * gwi
            gc[j, d] += gcj * gcj
        bw[i] -= lr * fdiff / math.sqrt(gbw[i])
        bc[j] -= lr * fdiff / math.sqrt(gbc[j])
        gbw[i] += fdiff * fdiff
        gbc[j] += fdiff * fdiff
    return total


def train_glove(table: CooccurrenceTable, dim: int = 300, epochs: int = 50,
                seed: int = 0, x_max: float = 100.0, alpha: float = 0.75,
                lr: float = 0.05) -> EmbeddingSpace:
    """Fit embeddings to the weighted least-squares objective with AdaGrad.

    f(x) (w_i.c_j + b_i + b~_j - ln x)^2 with f(x) = min((x/x_max)^a, 1),
    summed over nonzero co-occurrence cells. Word and context vectors are
    summed into the returned space. Deterministic under the seed.
    """
    coo = table.matrix.tocoo()
    if coo.nnz == 0:
        raise ValueError("empty co-occurrence table")
    rows = coo.row.astype(np.int64)
    cols = coo.col.astype(np.int64)
    x = coo.data.astype(np.float64)
    logx = np.log(x)
    fw = np.minimum((x / x_max) ** alpha, 1.0)

    u = len(table.terms)
    rng = np.random.default_rng(seed)
    spread = 0.5 / dim
    w = rng.uniform(-spread, spread, size=(u, dim))
    c = rng.uniform(-spread, spread, size=(u, dim))
    bw = rng.uniform(-spread, spread, size=u)
    bc = rng.uniform(-spread, spread, size=u)
    gw = np.ones((u, dim))
    gc = np.ones((u, dim))
    gbw = np.ones(u)
    gbc = np.ones(u)

    first_loss = None
    loss = math.nan
    for _ in range(epochs):
        order = rng.permutation(coo.nnz)
        loss = _adagrad_epoch(rows, cols, logx, fw, w, c, bw, bc,
                              gw, gc, gbw, gbc, lr, order) / coo.nnz
        if first_loss is None:
            first_loss = loss
        if not math.isfinite(loss):
            raise TrainingDiverged(loss)
    if epochs > 0 and loss > first_loss * 1.5:
        raise TrainingDiverged(loss)
    if epochs == 0:
        log.warning("epochs=0: embedding space is untrained initialization noise")

    vectors = w + c
    norms = np.linalg.norm(vectors, axis=1)
    keep = norms > 0.0
    if not np.all(keep):
        log.warning("dropping %d zero-norm vectors", int((~keep).sum()))
    terms = tuple(t for t, k in zip(table.terms, keep) if k)
    return EmbeddingSpace(terms, vectors[keep],
                          source=f"local-trained(epochs={epochs}, dim={dim}, "
                                 f"seed={seed})",
                          trained=epochs > 0)


def load_vectors(path) -> EmbeddingSpace:
    """Read a whitespace text embedding file (`term v1 ... vD` per line)."""
    terms: list[str] = []
    seen: dict[str, int] = {}
    vecs: list[np.ndarray] = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            term = parts[0].lower()
            vec = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = len(vec)
                if dim == 0:
                    raise ValueError(f"line {lineno}: no vector components")
            elif len(vec) != dim:
                raise ValueError(f"line {lineno}: expected {dim} components, "
                                 f"got {len(vec)}")
            if np.all(vec == 0.0):
                log.warning("skipping all-zero vector for %r (line %d)",
                            term, lineno)
                continue
            if term in seen:
                log.warning("duplicate term %r (line %d): last wins", term, lineno)
                vecs[seen[term]] = vec
                continue
            seen[term] = len(terms)
            terms.append(term)
            vecs.append(vec)
    if not terms:
        raise ValueError(f"no vectors found in {path}")
    return EmbeddingSpace(tuple(terms), np.vstack(vecs), source=f"external({path})")


def save_vectors(space: EmbeddingSpace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for term in space.terms:
            comps = " ".join(repr(float(v)) for v in space.vector(term))
            fh.write(f"{term} {comps}\n")


def cosine(space: EmbeddingSpace, a: str, b: str) -> float:
    """Cosine of the angle between two stored term vectors."""
    for t in (a, b):
        if t not in space:
            raise KeyError(f"term {t!r} not in embedding space")
    za, zb = space.vector(a), space.vector(b)
    return float(za @ zb / (np.linalg.norm(za) * np.linalg.norm(zb)))


def neighbors(space: EmbeddingSpace, term: str, m: int) -> list[tuple[str, float]]:
    """Top-m most cosine-similar terms, excluding the term itself.

    Exact similarity ties are broken lexicographically.
    """
    if term not in space:
        raise KeyError(f"term {term!r} not in embedding space")
    z = space.vector(term)
    norms = np.linalg.norm(space.matrix, axis=1)
    sims = (space.matrix @ z) / (norms * np.linalg.norm(z))
    candidates = [(t, float(sims[i])) for i, t in enumerate(space.terms)
                  if t != term]
    candidates.sort(key=lambda kv: (-kv[1], kv[0]))
    return candidates[:m]


def expand_query(keywords: KeywordList, space: EmbeddingSpace,
                 m: int) -> KeywordList:
    """Append each keyword's top-m neighbors; originals always retained.

    Keywords without a vector are skipped with a warning. m outside the
    studied 1..9 range is allowed but warned about.
    """
    if not 1 <= m <= 9:
        log.warning("expansion width m=%d outside the studied range 1..9", m)
    expanded = set(keywords.terms)
    for term in sorted(keywords.terms):
        if term not in space:
            log.warning("keyword %r has no embedding vector: skipped", term)
            continue
        expanded.update(t for t, _ in neighbors(space, term, m))
    return KeywordList(frozenset(expanded),
                       provenance=f"expanded(source={keywords.provenance}, "
                                  f"m={m}, space={space.source})")
