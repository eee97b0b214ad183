"""Cross-validated evaluation of any assessor."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from ..corpus.schema import LabeledUtterance
from ..errors import MissingLabelsError
from .folds import FoldPlan
from .metrics import LABELS, BinaryReport, Metrics, collapse_binary, compute_metrics

logger = logging.getLogger(__name__)

TASKS = ("overall", "fine")
HEADLINE = ("accuracy", "weighted_f1", "macro_f1")


class SmallFoldWarning(UserWarning):
    pass


class Assessor(Protocol):
    name: str
    trainable: bool

    def fit(self, train: Sequence[LabeledUtterance], task: str) -> None: ...

    def predict(self, test: Sequence[LabeledUtterance], task: str, offset: Sequence[int]) -> list:
        """Overall: one rank per utterance.  Fine: one rank list (n-1 long) per utterance.

        ``offset`` holds each test record's index in the full dataset, for
        systems whose randomness is keyed per example.
        """
        ...


@dataclass
class MetricReport:
    system: str
    task: str
    folds: list[Metrics]
    pooled: Metrics
    pooled_binary: BinaryReport
    notes: list[str] = field(default_factory=list)

    def mean(self, metric: str) -> float:
        return float(np.mean([getattr(m, metric) for m in self.folds]))

    def std(self, metric: str) -> float:
        """Population standard deviation over folds."""
        return float(np.std([getattr(m, metric) for m in self.folds], ddof=0))

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "task": self.task,
            "k": len(self.folds),
            "summary": {m: {"mean": self.mean(m), "std": self.std(m)} for m in HEADLINE},
            "folds": [m.to_dict() for m in self.folds],
            "pooled": self.pooled.to_dict(),
            "pooled_binary": self.pooled_binary.to_dict(),
            "notes": list(self.notes),
        }


@dataclass
class CVResult:
    report: MetricReport
    predictions: list[dict]


def gold_labels(records: Sequence[LabeledUtterance], task: str):
    if task == "overall":
        missing = [r.utterance_id for r in records if r.overall_rank is None]
        if missing:
            raise MissingLabelsError("overall_rank", missing)
        return [int(r.overall_rank) for r in records]
    missing = [r.utterance_id for r in records if r.interval_ranks is None]
    if missing:
        raise MissingLabelsError("interval_ranks", missing)
    return [[int(x) for x in r.interval_ranks] for r in records]


def _flatten(task: str, values) -> list[int]:
    return list(values) if task == "overall" else [int(x) for v in values for x in v]


def run_cv(
    dataset: Sequence[LabeledUtterance],
    system: Assessor,
    plan: FoldPlan,
    task: str = "overall",
    out_dir: str | Path | None = None,
) -> CVResult:
    """Fit on k-1 folds, score the held-out fold, aggregate mean and std."""
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}")
    gold_all = gold_labels(dataset, task)
    fold_metrics, notes, rows = [], [], []
    pooled_gold: list[int] = []
    pooled_pred: list[int] = []
    for f, (train_idx, test_idx) in enumerate(plan.splits()):
        test = [dataset[i] for i in test_idx]
        if system.trainable:
            system.fit([dataset[i] for i in train_idx], task)
        preds = system.predict(test, task, test_idx)
        if len(preds) != len(test):
            raise ValueError(f"{system.name} returned {len(preds)} predictions for {len(test)} records")
        gold = [gold_all[i] for i in test_idx]
        if task == "fine":
            for g, p, i in zip(gold, preds, test_idx):
                if len(g) != len(p):
                    raise ValueError(
                        f"{system.name}: {len(p)} interval predictions for {len(g)} intervals "
                        f"in {dataset[i].utterance_id}"
                    )
        flat_gold, flat_pred = _flatten(task, gold), _flatten(task, preds)
        absent = sorted(set(LABELS) - set(flat_gold))
        if absent:
            msg = f"fold {f}: class(es) {absent} absent from the test labels"
            warnings.warn(msg, SmallFoldWarning, stacklevel=2)
            notes.append(msg)
        fold_metrics.append(compute_metrics(flat_gold, flat_pred))
        pooled_gold += flat_gold
        pooled_pred += flat_pred
        for i, p in zip(test_idx, preds):
            rows.append(
                {
                    "fold": f,
                    "utterance_id": dataset[i].utterance_id,
                    "gold": gold_all[i],
                    "pred": p if task == "fine" else int(p),
                }
            )
        logger.info("%s %s fold %d accuracy %.4f", system.name, task, f, fold_metrics[-1].accuracy)
    notes.extend(getattr(system, "notes", []))
    report = MetricReport(
        system=system.name,
        task=task,
        folds=fold_metrics,
        pooled=compute_metrics(pooled_gold, pooled_pred),
        pooled_binary=collapse_binary(pooled_gold, pooled_pred),
        notes=notes,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{system.name}-{task}-folds.jsonl", "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
    return CVResult(report, rows)
