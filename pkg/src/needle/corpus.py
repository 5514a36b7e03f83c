"""Labeled corpora: loading, validation, and fold partitioning.

A corpus owns the ground-truth relevance labels and the fold plans that
every downstream experiment replays. Corpora and fold plans are
immutable after construction, so they can be shared freely between
parallel experiment legs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class CorpusError(ValueError):
    pass


class DuplicateId(CorpusError):
    pass


_TRUE_LABELS = {1, "1", True, 1.0}
_FALSE_LABELS = {0, "0", False, 0.0}


def _map_label(value):
    if isinstance(value, str):
        value = value.strip()
    if value in _TRUE_LABELS:
        return 1
    if value in _FALSE_LABELS:
        return 0
    return None


@dataclass(frozen=True)
class Document:
    """One unit of observation: an id, its text, and (optionally) a label."""

    id: str
    text: str
    label: int | None = None


@dataclass(frozen=True)
class RowRejection:
    row: int
    doc_id: str | None
    reason: str


@dataclass(frozen=True)
class LabeledCorpus:
    docs: tuple[Document, ...]
    name: str = ""
    rejections: tuple[RowRejection, ...] = field(default=(), compare=False)

    def __post_init__(self):
        seen = set()
        n_pos = 0
        for d in self.docs:
            if d.id in seen:
                raise DuplicateId(f"duplicate document id {d.id!r}")
            seen.add(d.id)
            if not d.text.strip():
                raise CorpusError(f"document {d.id!r} has empty text")
            if d.label not in (0, 1):
                raise CorpusError(f"document {d.id!r} is unlabeled")
            n_pos += d.label
        if n_pos == 0 or n_pos == len(self.docs):
            raise CorpusError("corpus must contain both relevant and irrelevant docs")

    def __len__(self) -> int:
        return len(self.docs)

    @property
    def positive_share(self) -> float:
        """Share of relevant documents, always recomputed."""
        return sum(d.label for d in self.docs) / len(self.docs)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.docs]

    def labels(self) -> np.ndarray:
        return np.array([d.label for d in self.docs], dtype=np.int8)

    def truth(self) -> dict[str, int]:
        return {d.id: d.label for d in self.docs}


def load_corpus(path, format: str = "jsonl", schema: dict | None = None,
                name: str | None = None) -> LabeledCorpus:
    """Load a labeled corpus from a JSONL or CSV file.

    ``schema`` maps the logical field names {"id", "text", "label"} onto
    the column names used in the file. Rows with empty text or a label
    that does not map onto {0,1} are collected into the corpus'
    rejection report instead of silently dropped; structural problems
    (missing file, duplicate ids, missing columns) raise.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    schema = {"id": "id", "text": "text", "label": "label", **(schema or {})}
    id_f, text_f, label_f = schema["id"], schema["text"], schema["label"]

    rows: list[tuple[int, dict]] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                if line.strip():
                    rows.append((i, json.loads(line)))
    elif format == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            for i, rec in enumerate(csv.DictReader(fh)):
                rows.append((i, rec))
    else:
        raise ValueError(f"unknown corpus format {format!r}")

    docs: list[Document] = []
    rejections: list[RowRejection] = []
    for i, rec in rows:
        try:
            raw_id, raw_text = rec[id_f], rec[text_f]
            raw_label = rec[label_f]
        except KeyError as e:
            raise CorpusError(f"row {i}: missing column {e}") from None
        doc_id = str(raw_id)
        label = _map_label(raw_label)
        if label is None:
            rejections.append(RowRejection(i, doc_id, f"unmappable label {raw_label!r}"))
            continue
        text = str(raw_text) if raw_text is not None else ""
        if not text.strip():
            rejections.append(RowRejection(i, doc_id, "empty text"))
            continue
        docs.append(Document(doc_id, text, label))

    return LabeledCorpus(tuple(docs), name=name or path.stem,
                         rejections=tuple(rejections))


def save_corpus(corpus: LabeledCorpus, path) -> None:
    """Write the corpus back out as canonical JSONL."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in corpus.docs:
            fh.write(json.dumps({"id": d.id, "text": d.text, "label": d.label},
                                ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    assignment: dict[str, int]
    stratified: bool
    seed: int

    def fold_ids(self, fold: int) -> list[str]:
        return [i for i, f in self.assignment.items() if f == fold]

    def to_json(self) -> str:
        return json.dumps({"n_folds": self.n_folds, "seed": self.seed,
                           "stratified": self.stratified,
                           "assignment": self.assignment}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FoldPlan":
        obj = json.loads(text)
        return cls(obj["n_folds"], dict(obj["assignment"]),
                   obj.get("stratified", False), obj["seed"])


def make_folds(corpus: LabeledCorpus, n_folds: int, stratified: bool = False,
               seed: int = 0) -> FoldPlan:
    """Randomly partition the corpus into near-equal folds.

    Fold sizes differ by at most one document. With ``stratified`` the
    per-fold counts of relevant documents also differ by at most one.
    Deterministic for a fixed corpus order and seed.
    """
    n = len(corpus)
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if n_folds > n:
        raise ValueError("more folds than documents")
    rng = np.random.default_rng(seed)

    if stratified:
        pos = [d.id for d in corpus.docs if d.label == 1]
        neg = [d.id for d in corpus.docs if d.label == 0]
        if min(len(pos), len(neg)) < n_folds:
            raise ValueError(
                f"class too small for {n_folds}-fold stratification "
                f"({len(pos)} relevant, {len(neg)} irrelevant)")
        order = [pos[i] for i in rng.permutation(len(pos))]
        order += [neg[i] for i in rng.permutation(len(neg))]
    else:
        ids = corpus.ids
        order = [ids[i] for i in rng.permutation(n)]

    # Dealing the (class-contiguous) order round-robin keeps both the
    # total and the per-class fold counts within one of each other.
    assignment = {doc_id: i % n_folds for i, doc_id in enumerate(order)}
    return FoldPlan(n_folds, assignment, stratified, seed)
