"""Pool-based learning loops: passive (random) and active (uncertainty).

One run holds out a test fold, seeds a random initial labeled set from
the remaining pool, then alternates training, recording pool/test
scores, and acquiring a batch of labels from an oracle. The oracle is
ground truth in simulation or a human behind the annotation service.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import learn
from .corpus import FoldPlan, LabeledCorpus
from .metrics import Scores, confusion, scores
from .textpipe import DocTermMatrix, Pipeline, PruneSpec, build_dtm

log = logging.getLogger(__name__)


class PoolExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class LoopConfig:
    init_size: int = 250
    batch_size: int = 50
    iterations: int = 15
    mode: str = "active"  # 'active' or 'passive'
    model_kind: str = "svm"  # 'svm' or 'logistic'
    reg_c: float = 1.0
    oversample_factor: float = 5.0  # passive mode only
    epochs: int = 20
    tune_grid: tuple | None = None  # optional reg_c grid, tuned once
    lang: str = "en"
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("active", "passive"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def final_labeled_count(self) -> int:
        return self.init_size + self.batch_size * self.iterations


@dataclass(frozen=True)
class BatchItem:
    doc_id: str
    text: str
    uncertainty: float


class SimulatedOracle:
    """Answers label queries from ground truth."""

    def __init__(self, truth: dict[str, int]):
        self._truth = dict(truth)

    def label(self, items: list[BatchItem]) -> dict[str, int]:
        return {item.doc_id: self._truth[item.doc_id] for item in items}


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    labeled_count: int
    positive_share: float
    pool_scores: Scores
    test_scores: Scores

    def to_dict(self) -> dict:
        return {"iteration": self.iteration,
                "labeled_count": self.labeled_count,
                "positive_share": self.positive_share,
                "pool": self.pool_scores.to_dict(),
                "test": self.test_scores.to_dict()}

    @classmethod
    def from_dict(cls, obj: dict) -> "IterationRecord":
        return cls(obj["iteration"], obj["labeled_count"],
                   obj["positive_share"],
                   Scores(**obj["pool"]), Scores(**obj["test"]))


@dataclass(frozen=True)
class LearningTrace:
    mode: str
    model_kind: str
    test_fold: int
    seed: int
    records: tuple[IterationRecord, ...]
    acquired_ids: tuple[str, ...] = field(default=(), compare=False)

    def to_json_lines(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n"
                       for r in self.records)

    @classmethod
    def from_json_lines(cls, text: str, mode="", model_kind="",
                        test_fold=-1, seed=0) -> "LearningTrace":
        records = tuple(IterationRecord.from_dict(json.loads(line))
                        for line in text.splitlines() if line.strip())
        return cls(mode, model_kind, test_fold, seed, records)

    def csv_rows(self):
        """Plot-ready rows; undefined scores rendered as 0."""
        for r in self.records:
            pool, test = r.pool_scores.as_zero(), r.test_scores.as_zero()
            yield (r.iteration, r.labeled_count, r.positive_share,
                   pool.precision, pool.recall, pool.f1,
                   test.precision, test.recall, test.f1)


CSV_HEADER = ("iteration", "labeled_count", "pos_share", "pool_p", "pool_r",
              "pool_f1", "test_p", "test_r", "test_f1")


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def select_uncertain(model: learn.LinearModel, pool_matrix, n: int) -> np.ndarray:
    """Row positions of the n most uncertain pool documents.

    Uncertainty is |p - 0.5| for probabilistic models and the
    perpendicular hyperplane distance for the SVM. Ties break by row
    order (equal to corpus order of the pool).
    """
    if n > pool_matrix.shape[0]:
        raise ValueError("batch larger than pool")
    if model.kind == "logistic":
        keys = np.abs(learn.predict_proba(model, pool_matrix) - 0.5)
    else:
        keys = learn.hyperplane_distance(model, pool_matrix)
    return np.argsort(keys, kind="stable")[:n]


def default_dtm(corpus: LabeledCorpus, lang: str = "en") -> DocTermMatrix:
    """Boolean stemmed features, mildly pruned: the supervised default."""
    _, dtm = build_dtm(corpus, pipeline=Pipeline(lang=lang, stem=True),
                       prune=PruneSpec(min_doc_count=2, min_total_count=2),
                       weighting="boolean")
    return dtm


def run_loop(corpus: LabeledCorpus, fold_plan: FoldPlan, test_fold: int,
             cfg: LoopConfig, oracle, dtm: DocTermMatrix | None = None,
             on_record=None) -> LearningTrace:
    """One pool-based run against the held-out ``test_fold``.

    Trains on the labeled set (passive: minority oversampled by the
    configured factor; active: no resampling), records pool and test
    scores, then acquires a batch: uniformly at random in passive mode,
    by uncertainty in active mode. Produces ``iterations + 1`` records;
    the last one evaluates the final labeled set without acquiring.
    ``on_record`` is called with each record as it is produced.
    """
    if dtm is None:
        dtm = default_dtm(corpus, cfg.lang)
    truth = corpus.truth()
    id_to_row = {doc_id: i for i, doc_id in enumerate(dtm.doc_ids)}

    pool_ids = [d for d in corpus.ids if fold_plan.assignment[d] != test_fold]
    test_ids = [d for d in corpus.ids if fold_plan.assignment[d] == test_fold]
    if cfg.final_labeled_count > len(pool_ids):
        raise PoolExhausted(
            f"pool of {len(pool_ids)} cannot supply {cfg.final_labeled_count} labels")
    test_rows = np.array([id_to_row[d] for d in test_ids])
    X_test = dtm.matrix[test_rows]

    rng_init = _rng(cfg.seed, test_fold, 0, 0)
    order = rng_init.permutation(len(pool_ids))
    labeled = [pool_ids[i] for i in order[:cfg.init_size]]
    unlabeled = [d for d in pool_ids if d not in set(labeled)]

    oracle_labels: dict[str, int] = {}
    initial_items = [BatchItem(d, corpus.docs[id_to_row[d]].text, 0.0)
                     for d in labeled]
    oracle_labels.update(oracle.label(initial_items))

    tuned_c = cfg.reg_c
    records = []
    acquired: list[str] = list(labeled)
    for step in range(cfg.iterations + 1):
        assert not set(labeled) & set(unlabeled)
        assert set(labeled) | set(unlabeled) == set(pool_ids)

        rows = np.array([id_to_row[d] for d in labeled], dtype=np.int64)
        X_lab = dtm.matrix[rows]
        y_lab = np.array([oracle_labels[d] for d in labeled], dtype=np.int8)

        model = None
        if len(np.unique(y_lab)) == 2:
            train_seed = int(_rng(cfg.seed, test_fold, step, 1).integers(2**63))
            X_tr, y_tr = X_lab, y_lab
            if cfg.mode == "passive":
                X_tr, y_tr = learn.resample(
                    X_lab, y_lab,
                    learn.ResamplePlan("oversample", cfg.oversample_factor,
                                       seed=train_seed))
            if step == 0 and cfg.tune_grid:
                try:
                    grid = [{"kind": cfg.model_kind, "reg_c": c}
                            for c in cfg.tune_grid]
                    tuned_c = learn.tune(X_lab, y_lab, grid,
                                         seed=train_seed,
                                         epochs=cfg.epochs)["reg_c"]
                except ValueError as e:
                    log.warning("tuning skipped (%s); using reg_c=%s", e, cfg.reg_c)
            model = learn.train(X_tr, y_tr, kind=cfg.model_kind, reg_c=tuned_c,
                                seed=train_seed, epochs=cfg.epochs)
        else:
            log.warning("iteration %d: single-class labeled set, "
                        "falling back to random acquisition", step)

        pool_rows = np.array([id_to_row[d] for d in unlabeled], dtype=np.int64)
        X_pool = dtm.matrix[pool_rows]
        if model is not None:
            pool_pred = learn.predict(model, X_pool)
            test_pred = learn.predict(model, X_test)
        else:
            pool_pred = np.zeros(len(unlabeled), dtype=np.int8)
            test_pred = np.zeros(len(test_ids), dtype=np.int8)

        pool_scores = scores(confusion(
            dict(zip(unlabeled, (int(v) for v in pool_pred))),
            {d: truth[d] for d in unlabeled}))
        test_scores = scores(confusion(
            dict(zip(test_ids, (int(v) for v in test_pred))),
            {d: truth[d] for d in test_ids}))
        record = IterationRecord(
            iteration=step, labeled_count=len(labeled),
            positive_share=float(np.mean([oracle_labels[d] for d in labeled])),
            pool_scores=pool_scores, test_scores=test_scores)
        records.append(record)
        if on_record is not None:
            on_record(record)

        if step == cfg.iterations:
            break

        if cfg.mode == "active" and model is not None:
            picked = select_uncertain(model, X_pool, cfg.batch_size)
            if model.kind == "logistic":
                keys = np.abs(learn.predict_proba(model, X_pool) - 0.5)
            else:
                keys = learn.hyperplane_distance(model, X_pool)
            batch_ids = [unlabeled[i] for i in picked]
            uncertainties = [float(keys[i]) for i in picked]
        else:
            rng_step = _rng(cfg.seed, test_fold, step, 2)
            picked = rng_step.choice(len(unlabeled), size=cfg.batch_size,
                                     replace=False)
            picked = np.sort(picked)
            batch_ids = [unlabeled[i] for i in picked]
            uncertainties = [0.0] * len(batch_ids)

        items = [BatchItem(d, corpus.docs[id_to_row[d]].text, u)
                 for d, u in zip(batch_ids, uncertainties)]
        new_labels = oracle.label(items)
        if set(new_labels) != set(batch_ids):
            raise ValueError("oracle returned labels for the wrong ids")
        oracle_labels.update(new_labels)

        batch_set = set(batch_ids)
        labeled.extend(batch_ids)
        acquired.extend(batch_ids)
        unlabeled = [d for d in unlabeled if d not in batch_set]

    return LearningTrace(cfg.mode, cfg.model_kind, test_fold, cfg.seed,
                         tuple(records), tuple(acquired))


def run_replications(corpus: LabeledCorpus, fold_plan: FoldPlan,
                     cfg: LoopConfig, oracle_factory=None,
                     dtm: DocTermMatrix | None = None) -> list[LearningTrace]:
    """One run per fold, each fold serving once as the held-out test set."""
    if dtm is None:
        dtm = default_dtm(corpus, cfg.lang)
    if oracle_factory is None:
        truth = corpus.truth()
        oracle_factory = lambda fold: SimulatedOracle(truth)
    return [run_loop(corpus, fold_plan, fold, cfg, oracle_factory(fold), dtm)
            for fold in range(fold_plan.n_folds)]


def mean_test_f1(traces: list[LearningTrace]) -> list[float]:
    """Mean test F1 per iteration across traces, undefined rendered 0."""
    n_iters = len(traces[0].records)
    means = []
    for i in range(n_iters):
        vals = [t.records[i].test_scores.as_zero().f1 for t in traces]
        means.append(float(np.mean(vals)))
    return means


def mean_positive_share(traces: list[LearningTrace]) -> list[float]:
    n_iters = len(traces[0].records)
    return [float(np.mean([t.records[i].positive_share for t in traces]))
            for i in range(n_iters)]
