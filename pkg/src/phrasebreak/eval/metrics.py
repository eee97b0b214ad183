"""Accuracy, per-class precision/recall/F1, macro and weighted F1."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

LABELS = (1, 2, 3)
BINARY_NAMES = ("inappropriate", "appropriate")


@dataclass(frozen=True)
class ClassStats:
    precision: float
    recall: float
    f1: float
    support: int
    predicted: int


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    weighted_f1: float
    macro_f1: float
    per_class: dict[int, ClassStats]
    n: int

    @property
    def zero_support(self) -> list[int]:
        """Classes absent from the gold labels (their F1 is 0 by convention)."""
        return [c for c, s in self.per_class.items() if s.support == 0]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "n": self.n,
            "zero_support": self.zero_support,
            "per_class": {str(c): asdict(s) for c, s in self.per_class.items()},
        }


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion(gold: Sequence[int], pred: Sequence[int], labels: Sequence[int] = LABELS) -> np.ndarray:
    """``m[i, j]`` counts gold ``labels[i]`` predicted as ``labels[j]``."""
    index = {c: i for i, c in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold, pred):
        m[index[int(g)], index[int(p)]] += 1
    return m


def compute_metrics(gold: Sequence[int], pred: Sequence[int], labels: Sequence[int] = LABELS) -> Metrics:
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} labels but pred has {len(pred)}")
    if not gold:
        raise ValueError("cannot score an empty label list")
    m = confusion(gold, pred, labels)
    n = int(m.sum())
    per_class = {}
    for i, c in enumerate(labels):
        tp = float(m[i, i])
        support = int(m[i].sum())
        predicted = int(m[:, i].sum())
        p = _ratio(tp, predicted)
        r = _ratio(tp, support)
        per_class[c] = ClassStats(p, r, _ratio(2 * p * r, p + r), support, predicted)
    f1 = np.array([s.f1 for s in per_class.values()])
    support = np.array([s.support for s in per_class.values()], dtype=float)
    return Metrics(
        accuracy=float(np.trace(m)) / n,
        weighted_f1=float(f1 @ support) / n,
        macro_f1=float(f1.mean()),
        per_class=per_class,
        n=n,
    )


@dataclass(frozen=True)
class BinaryReport:
    inappropriate: ClassStats
    appropriate: ClassStats

    def to_dict(self) -> dict:
        return {"inappropriate": asdict(self.inappropriate), "appropriate": asdict(self.appropriate)}


def collapse(rank: int) -> int:
    """Poor/Fair -> 0 (inappropriate), Great -> 1 (appropriate)."""
    return 1 if int(rank) == 3 else 0


def collapse_binary(gold: Sequence[int], pred: Sequence[int]) -> BinaryReport:
    m = compute_metrics([collapse(g) for g in gold], [collapse(p) for p in pred], labels=(0, 1))
    return BinaryReport(m.per_class[0], m.per_class[1])
