"""Linear classifiers over sparse feature matrices, plus imbalance treatments.

Models are trained by plain sequential SGD with a decaying step size and
a fixed epoch budget, which keeps runs exactly reproducible under a
seed. Resampling (random over/undersampling, SMOTE) and per-instance
cost weighting are the supported treatments for class imbalance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .metrics import Confusion, f_omega


class SingleClassError(ValueError):
    """Training data contains only one class."""


# ------------------------------------------------------------- resampling

@dataclass(frozen=True)
class ResamplePlan:
    """strategy: 'oversample' | 'undersample' | 'smote'."""

    strategy: str
    factor: float
    neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.strategy in ("oversample", "smote") and self.factor <= 1:
            raise ValueError("oversample/smote factor must exceed 1")
        if self.strategy == "undersample" and not 0 < self.factor < 1:
            raise ValueError("undersample factor must be in (0, 1)")
        if self.strategy not in ("oversample", "undersample", "smote"):
            raise ValueError(f"unknown strategy {self.strategy!r}")


def _minority_class(labels: np.ndarray) -> int:
    pos = int(labels.sum())
    return 1 if pos * 2 <= len(labels) else 0


def resample(matrix: sp.csr_matrix, labels: np.ndarray,
             plan: ResamplePlan) -> tuple[sp.csr_matrix, np.ndarray]:
    """Return a resampled copy of (matrix, labels); inputs stay intact."""
    labels = np.asarray(labels)
    minority = _minority_class(labels)
    min_idx = np.flatnonzero(labels == minority)
    maj_idx = np.flatnonzero(labels != minority)
    if len(min_idx) == 0:
        raise SingleClassError("no minority instances to resample")
    rng = np.random.default_rng(plan.seed)

    if plan.strategy == "oversample":
        target = int(np.ceil(plan.factor * len(min_idx)))
        extra = rng.choice(min_idx, size=target - len(min_idx), replace=True)
        order = np.concatenate([np.arange(matrix.shape[0]), extra])
        return matrix[order], labels[order]

    if plan.strategy == "undersample":
        target = int(np.ceil(plan.factor * len(maj_idx)))
        kept = rng.choice(maj_idx, size=target, replace=False)
        order = np.sort(np.concatenate([min_idx, kept]))
        return matrix[order], labels[order]

    # SMOTE: synthesize minority rows on segments between neighbors
    q = plan.neighbors
    if len(min_idx) <= q:
        raise ValueError(f"SMOTE needs more than {q} minority instances")
    target = int(np.ceil(plan.factor * len(min_idx)))
    n_new = target - len(min_idx)
    dense = matrix[min_idx].toarray().astype(np.float64)
    # pairwise Euclidean distances within the (small) minority set
    sq = (dense ** 2).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * dense @ dense.T
    np.fill_diagonal(d2, np.inf)
    nn = np.argsort(d2, axis=1, kind="stable")[:, :q]

    synthetic = np.empty((n_new, dense.shape[1]))
    for s in range(n_new):
        a = rng.integers(len(min_idx))
        b = nn[a, rng.integers(q)]
        gaps = rng.random(dense.shape[1])
        synthetic[s] = dense[a] + gaps * (dense[b] - dense[a])
    new_matrix = sp.vstack([matrix, sp.csr_matrix(synthetic)], format="csr")
    new_labels = np.concatenate([labels, np.full(n_new, minority, dtype=labels.dtype)])
    return new_matrix, new_labels


# ----------------------------------------------------------------- models

@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: str  # 'svm' (hinge loss) or 'logistic'
    reg_c: float

    def save(self, path) -> None:
        """JSON header + little-endian float64 weight vector; deterministic."""
        import json
        header = {"kind": self.kind, "reg_c": self.reg_c, "bias": self.bias,
                  "dim": int(self.weights.shape[0])}
        with open(f"{path}.json", "w", encoding="utf-8") as fh:
            json.dump(header, fh, sort_keys=True)
        with open(f"{path}.bin", "wb") as fh:
            fh.write(self.weights.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "LinearModel":
        import json
        with open(f"{path}.json", encoding="utf-8") as fh:
            header = json.load(fh)
        raw = open(f"{path}.bin", "rb").read()
        weights = np.frombuffer(raw, dtype="<f8").copy()
        if weights.shape[0] != header["dim"]:
            raise ValueError("weight vector does not match header dimension")
        return cls(weights, header["bias"], header["kind"], header["reg_c"])


def train(matrix: sp.csr_matrix, labels: np.ndarray, kind: str = "svm",
          reg_c: float = 1.0, seed: int = 0, epochs: int = 20,
          sample_weight: np.ndarray | None = None) -> LinearModel:
    """SGD on hinge or logistic loss with an L2 penalty scaled by 1/C.

    Objective: mean loss + ||w||^2 / (2 C n). The bias is not
    regularized. ``sample_weight`` multiplies per-instance loss, which
    is the cost-matrix alternative to resampling.
    """
    if kind not in ("svm", "logistic"):
        raise ValueError(f"unknown model kind {kind!r}")
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise SingleClassError("training set contains a single class")
    if reg_c <= 0:
        raise ValueError("reg_c must be positive")

    X = matrix.tocsr()
    n, dim = X.shape
    y = np.where(labels == 1, 1.0, -1.0)
    weight = np.ones(n) if sample_weight is None else np.asarray(sample_weight, float)

    indptr, indices, data = X.indptr, X.indices, X.data
    # lazy scaling: w = scale * v, so the L2 decay costs O(1) per step
    v = np.zeros(dim)
    scale = 1.0
    b = 0.0
    lam = 1.0 / (reg_c * n)
    rng = np.random.default_rng(seed)
    eta0 = 1.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            eta = eta0 / (1.0 + eta0 * lam * t)
            t += 1
            lo, hi = indptr[i], indptr[i + 1]
            cols = indices[lo:hi]
            vals = data[lo:hi]
            margin = y[i] * (scale * (v[cols] @ vals) + b)
            scale *= 1.0 - eta * lam
            if scale < 1e-9:
                v *= scale
                scale = 1.0
            if kind == "svm":
                g = weight[i] * y[i] if margin < 1.0 else 0.0
            else:
                # d/df log(1 + exp(-y f)) = -y sigma(-y f)
                g = weight[i] * y[i] / (1.0 + np.exp(min(margin, 35.0)))
            if g != 0.0:
                v[cols] += (eta * g / scale) * vals
                b += eta * g
    return LinearModel(scale * v, float(b), kind, reg_c)


def decision_value(model: LinearModel, matrix) -> np.ndarray:
    """Signed, un-normalized w.x + b per row."""
    out = matrix @ model.weights + model.bias
    return np.asarray(out).ravel()


def hyperplane_distance(model: LinearModel, matrix) -> np.ndarray:
    """Perpendicular distance |w.x + b| / ||w|| per row."""
    norm = float(np.linalg.norm(model.weights))
    if norm == 0.0:
        return np.abs(decision_value(model, matrix))
    return np.abs(decision_value(model, matrix)) / norm


def predict_proba(model: LinearModel, matrix) -> np.ndarray:
    """Sigmoid of the decision value; logistic models only."""
    if model.kind != "logistic":
        raise ValueError("predicted probabilities require a logistic model")
    f = decision_value(model, matrix)
    return 1.0 / (1.0 + np.exp(-np.clip(f, -35.0, 35.0)))


def predict(model: LinearModel, matrix) -> np.ndarray:
    return (decision_value(model, matrix) >= 0.0).astype(np.int8)


def training_loss(model: LinearModel, matrix, labels) -> float:
    """Mean unregularized loss; used by convergence diagnostics."""
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    f = decision_value(model, matrix)
    if model.kind == "svm":
        return float(np.maximum(0.0, 1.0 - y * f).mean())
    return float(np.log1p(np.exp(-np.clip(y * f, -35.0, 35.0))).mean())


# ----------------------------------------------------------------- tuning

def stratified_fold_indices(labels: np.ndarray, n_folds: int,
                            seed: int = 0) -> np.ndarray:
    """Fold index per row; per-fold class counts differ by at most one."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    cursor = 0
    for cls in (1, 0):
        idx = np.flatnonzero(labels == cls)
        if len(idx) < n_folds:
            raise ValueError(f"class {cls} too small for {n_folds} folds")
        idx = idx[rng.permutation(len(idx))]
        for j, row in enumerate(idx):
            assignment[row] = (cursor + j) % n_folds
        cursor += len(idx)
    return assignment


def minority_f1(pred: np.ndarray, truth: np.ndarray) -> float | None:
    tp = int(((pred == 1) & (truth == 1)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    return f_omega(Confusion(tp, fp, fn, len(truth) - tp - fp - fn))


def tune(matrix, labels, grid, n_folds: int = 5,
         plan: ResamplePlan | None = ResamplePlan("oversample", 5.0),
         seed: int = 0, max_overfit_gap: float = 0.3,
         epochs: int = 20) -> dict:
    """Grid search by mean minority-class F1 over stratified CV folds.

    Resampling is applied inside each training fold only, never to the
    validation fold. Grid points whose train-F1 exceeds val-F1 by more
    than ``max_overfit_gap`` are rejected as overfit. Ties go to the
    smallest C.
    """
    labels = np.asarray(labels)
    folds = stratified_fold_indices(labels, n_folds, seed)
    grid = [dict(g) for g in grid]
    results = []
    for gi, params in enumerate(grid):
        val_scores, train_scores = [], []
        for f in range(n_folds):
            tr, va = folds != f, folds == f
            X_tr, y_tr = matrix[tr], labels[tr]
            if plan is not None and y_tr.sum() > 0:
                X_tr, y_tr = resample(X_tr, y_tr, plan)
            model = train(X_tr, y_tr, seed=seed + 31 * gi + f,
                          epochs=epochs, **params)
            val_scores.append(minority_f1(predict(model, matrix[va]), labels[va]))
            train_scores.append(minority_f1(predict(model, X_tr), y_tr))
        as_zero = [0.0 if s is None else s for s in val_scores]
        tr_zero = [0.0 if s is None else s for s in train_scores]
        mean_val = float(np.mean(as_zero))
        gap = float(np.mean(tr_zero)) - mean_val
        results.append((params, mean_val, gap))

    admissible = [r for r in results if r[2] <= max_overfit_gap]
    if not admissible:
        admissible = results  # all overfit: fall back to the full grid
    best = max(admissible, key=lambda r: (r[1], -r[0].get("reg_c", 0.0)))
    return dict(best[0])
