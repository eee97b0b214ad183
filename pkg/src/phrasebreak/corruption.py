"""Replaced-break-token corruption for discriminator pre-training."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import SchemaError, UncorruptibleError
from .tokenizer import BREAKS, BreakToken, TokenSequence, parse, render

DEFAULT_P = 0.15
DEFAULT_RATIO = 3

SeedLike = Union[int, np.random.Generator]


class Label(str, enum.Enum):
    ORIGINAL = "original"
    CORRUPTED = "corrupted"


@dataclass(frozen=True)
class CorruptionRecord:
    sequence: TokenSequence
    replaced_mask: tuple[bool, ...]
    label: Label

    def __post_init__(self) -> None:
        object.__setattr__(self, "replaced_mask", tuple(bool(m) for m in self.replaced_mask))
        object.__setattr__(self, "label", Label(self.label))
        if len(self.replaced_mask) != len(self.sequence.breaks):
            raise ValueError("replaced_mask must have one entry per break")
        if (self.label is Label.CORRUPTED) != any(self.replaced_mask):
            raise ValueError("label must be 'corrupted' exactly when some break was replaced")

    def to_dict(self) -> dict:
        return {
            "tokens": render(self.sequence),
            "mask": list(self.replaced_mask),
            "label": self.label.value,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CorruptionRecord":
        return cls(parse(obj["tokens"]), tuple(obj["mask"]), Label(obj["label"]))


def _as_rng(rng: SeedLike) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def draw_replacements(
    current: np.ndarray, rng: np.random.Generator, weights: np.ndarray | None = None
) -> np.ndarray:
    """Pick a different break kind for each entry of ``current`` (int indices).

    ``weights`` is an optional 4x4 row-stochastic matrix with a zero
    diagonal; by default the three other kinds are equally likely.
    """
    if weights is None:
        return (current + rng.integers(1, 4, size=current.shape)) % 4
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4, 4) or np.any(np.diag(weights) != 0):
        raise ValueError("weights must be 4x4 with a zero diagonal")
    cdf = np.cumsum(weights / weights.sum(axis=1, keepdims=True), axis=1)
    u = rng.random(current.shape)
    return np.minimum((u[:, None] > cdf[current]).sum(axis=1), 3)


def corrupt_breaks(
    breaks: np.ndarray, p: float, rng: np.random.Generator, weights: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """One independent replacement draw, without the at-least-one guarantee."""
    mask = rng.random(breaks.shape) < p
    out = breaks.copy()
    out[mask] = draw_replacements(breaks[mask], rng, weights)
    return out, mask


def corrupt(
    seq: TokenSequence,
    p: float = DEFAULT_P,
    rng: SeedLike = 0,
    weights: np.ndarray | None = None,
) -> CorruptionRecord:
    """Replace each break with probability ``p``; redraw until one changed."""
    if not 0 < p <= 1:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if not seq.breaks:
        raise UncorruptibleError("uncorruptible: sequence has no break tokens")
    gen = _as_rng(rng)
    src = np.fromiter((b.index for b in seq.breaks), dtype=np.int64)
    while True:
        new, mask = corrupt_breaks(src, p, gen, weights)
        if mask.any():
            break
    return CorruptionRecord(
        seq.with_breaks([BREAKS[i] for i in new]), tuple(mask.tolist()), Label.CORRUPTED
    )


def original_record(seq: TokenSequence) -> CorruptionRecord:
    return CorruptionRecord(seq, (False,) * len(seq.breaks), Label.ORIGINAL)


def build_pretraining_set(
    originals: Sequence[TokenSequence],
    ratio: int = DEFAULT_RATIO,
    p: float = DEFAULT_P,
    rng: SeedLike = 0,
    weights: np.ndarray | None = None,
) -> list[CorruptionRecord]:
    """One original plus ``ratio`` corrupted variants per input sequence.

    Each original gets its own generator seeded by ``(master seed, index)``,
    so output for one sequence does not depend on its neighbours.
    """
    if ratio < 1:
        raise ValueError(f"ratio must be >= 1, got {ratio}")
    if not originals:
        raise ValueError("no original sequences given")
    bad = [i for i, s in enumerate(originals) if not s.breaks]
    if bad:
        raise UncorruptibleError(f"uncorruptible: original(s) {bad[:10]} have no break tokens")
    master = rng if isinstance(rng, int) else int(rng.integers(2**63 - 1))
    out: list[CorruptionRecord] = []
    for i, seq in enumerate(originals):
        sub = np.random.default_rng([master, i])
        out.append(original_record(seq))
        out.extend(corrupt(seq, p, sub, weights) for _ in range(ratio))
    return out


def save_records(records: Iterable[CorruptionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False))
            fh.write("\n")


def load_records(path: str | Path) -> list[CorruptionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                out.append(CorruptionRecord.from_dict(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise SchemaError(f"line {lineno}: {exc}", len(out)) from None
    return out
