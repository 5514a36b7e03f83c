"""Experiment configuration: one declarative JSON file per run.

A run must be reproducible from config + corpus + seeds alone, so the
resolved config is hashed and the hash is embedded into every results
file the run writes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

TASKS = ("keywords", "expand", "topicrules", "supervised", "serve")


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: dict
    task: str
    seed: int = 0
    out_dir: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if "path" not in self.corpus:
            raise ValueError("config needs corpus.path")

    def to_dict(self) -> dict:
        return {"corpus": self.corpus, "task": self.task, "seed": self.seed,
                "out_dir": self.out_dir, "params": self.params}

    def hash(self) -> str:
        """Identifies the experiment: everything but the output location."""
        payload = self.to_dict()
        del payload["out_dir"]
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def load_config(path, task: str | None = None,
                overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file; CLI ``overrides`` replace top-level keys.

    The file may set a default ``task``; the CLI subcommand (passed as
    ``task``) wins. Per-task parameters live under a key of the task's
    name.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    for key, value in (overrides or {}).items():
        if value is not None:
            obj[key] = value
    task = task or obj.get("task")
    if task is None:
        raise ValueError("no task: pass a subcommand or set 'task' in the config")
    return ExperimentConfig(corpus=obj["corpus"], task=task,
                            seed=int(obj.get("seed", 0)),
                            out_dir=obj.get("out_dir", "results"),
                            params=obj.get(task, {}))


def results_header(config: ExperimentConfig) -> str:
    """Comment lines embedded at the top of every results file."""
    return (f"# config_hash={config.hash()}\n"
            f"# seed={config.seed}\n"
            f"# task={config.task}\n")


def ensure_out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out
