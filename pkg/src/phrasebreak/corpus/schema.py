"""Canonical data types and the JSONL dataset format."""

from __future__ import annotations

import enum
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from ..errors import EmptyUtteranceError, SchemaError


class Rank(enum.IntEnum):
    POOR = 1
    FAIR = 2
    GREAT = 3

    @property
    def label(self) -> str:
        return self.name.capitalize()


RANKS: tuple[Rank, ...] = (Rank.POOR, Rank.FAIR, Rank.GREAT)

# Per-rank label totals of the published 800-utterance learner corpus.
PUBLISHED_OVERALL_COUNTS = {Rank.POOR: 21, Rank.FAIR: 136, Rank.GREAT: 643}
PUBLISHED_FINE_GRAINED_COUNTS = {Rank.POOR: 129, Rank.FAIR: 644, Rank.GREAT: 10797}

_EDGE_PUNCT = re.compile(r"^\W+|\W+$", re.UNICODE)


def normalize_word(text: str) -> str:
    """Lower-case and strip surrounding punctuation; inner apostrophes and hyphens stay."""
    return _EDGE_PUNCT.sub("", text.strip()).lower()


@dataclass(frozen=True)
class AlignedWord:
    text: str
    start_s: float
    end_s: float

    def __post_init__(self) -> None:
        if not self.text or any(c.isspace() for c in self.text):
            raise ValueError(f"word text must be non-empty without whitespace: {self.text!r}")
        if not (math.isfinite(self.start_s) and math.isfinite(self.end_s)):
            raise ValueError(f"non-finite time on word {self.text!r}")
        if self.start_s < 0:
            raise ValueError(f"negative start time on word {self.text!r}")
        if self.end_s <= self.start_s:
            raise ValueError(
                f"word {self.text!r} ends ({self.end_s}) at or before it starts ({self.start_s})"
            )

    @property
    def duration(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class AlignedUtterance:
    utterance_id: str
    words: tuple[AlignedWord, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "words", tuple(self.words))
        if not self.words:
            raise EmptyUtteranceError(f"utterance {self.utterance_id!r} has no words")

    @property
    def transcript(self) -> str:
        return " ".join(w.text for w in self.words)

    @property
    def n(self) -> int:
        return len(self.words)

    def gaps(self) -> list[float]:
        return [b.start_s - a.end_s for a, b in zip(self.words, self.words[1:])]


@dataclass(frozen=True)
class LabeledUtterance:
    utterance: AlignedUtterance
    overall_rank: Rank | None = None
    interval_ranks: tuple[Rank, ...] | None = None

    def __post_init__(self) -> None:
        if self.overall_rank is not None:
            object.__setattr__(self, "overall_rank", Rank(self.overall_rank))
        if self.interval_ranks is not None:
            ranks = tuple(Rank(r) for r in self.interval_ranks)
            if len(ranks) != self.utterance.n - 1:
                raise ValueError(
                    f"interval_ranks has {len(ranks)} entries, expected n-1 = {self.utterance.n - 1}"
                )
            object.__setattr__(self, "interval_ranks", ranks)

    @property
    def utterance_id(self) -> str:
        return self.utterance.utterance_id


@dataclass
class LabelCounts:
    overall: dict[Rank, int] = field(default_factory=lambda: {r: 0 for r in RANKS})
    fine_grained: dict[Rank, int] = field(default_factory=lambda: {r: 0 for r in RANKS})

    @property
    def overall_total(self) -> int:
        return sum(self.overall.values())

    @property
    def fine_grained_total(self) -> int:
        return sum(self.fine_grained.values())


def label_counts(records: Iterable[LabeledUtterance]) -> LabelCounts:
    overall: Counter[Rank] = Counter()
    fine: Counter[Rank] = Counter()
    for rec in records:
        if rec.overall_rank is not None:
            overall[rec.overall_rank] += 1
        if rec.interval_ranks is not None:
            fine.update(rec.interval_ranks)
    return LabelCounts({r: overall[r] for r in RANKS}, {r: fine[r] for r in RANKS})


# --- JSONL (de)serialization -------------------------------------------------

_RECORD_KEYS = ("utterance_id", "words", "overall_rank", "interval_ranks")


def _rank_or_none(value, index: int, name: str) -> Rank | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value not in (1, 2, 3):
        raise SchemaError(f"rank must be 1, 2, 3 or null, got {value!r}", index, name)
    return Rank(value)


def record_from_dict(obj: dict, index: int = 0) -> LabeledUtterance:
    if not isinstance(obj, dict):
        raise SchemaError("record must be a JSON object", index)
    for key in ("utterance_id", "words"):
        if key not in obj:
            raise SchemaError("missing required field", index, key)
    unknown = set(obj) - set(_RECORD_KEYS)
    if unknown:
        raise SchemaError(f"unknown field(s) {sorted(unknown)}", index)
    uid = obj["utterance_id"]
    if not isinstance(uid, str) or not uid:
        raise SchemaError("must be a non-empty string", index, "utterance_id")
    raw_words = obj["words"]
    if not isinstance(raw_words, list) or not raw_words:
        raise SchemaError("must be a non-empty list", index, "words")
    words = []
    for j, w in enumerate(raw_words):
        fname = f"words[{j}]"
        if not isinstance(w, dict) or set(w) != {"w", "s", "e"}:
            raise SchemaError("word must be an object with keys w, s, e", index, fname)
        if not isinstance(w["w"], str):
            raise SchemaError("'w' must be a string", index, fname)
        if not all(isinstance(w[k], (int, float)) and not isinstance(w[k], bool) for k in "se"):
            raise SchemaError("'s' and 'e' must be numbers", index, fname)
        try:
            words.append(AlignedWord(w["w"], float(w["s"]), float(w["e"])))
        except ValueError as exc:
            raise SchemaError(str(exc), index, fname) from None
    utt = AlignedUtterance(uid, tuple(words))
    overall = _rank_or_none(obj.get("overall_rank"), index, "overall_rank")
    raw_intervals = obj.get("interval_ranks")
    intervals = None
    if raw_intervals is not None:
        if not isinstance(raw_intervals, list):
            raise SchemaError("must be a list or null", index, "interval_ranks")
        intervals = tuple(
            _rank_or_none(r, index, f"interval_ranks[{k}]") for k, r in enumerate(raw_intervals)
        )
        if any(r is None for r in intervals):
            raise SchemaError("entries must not be null", index, "interval_ranks")
        if len(intervals) != utt.n - 1:
            raise SchemaError(
                f"length {len(intervals)} does not match n-1 = {utt.n - 1}", index, "interval_ranks"
            )
    return LabeledUtterance(utt, overall, intervals)


def record_to_dict(rec: LabeledUtterance) -> dict:
    return {
        "utterance_id": rec.utterance.utterance_id,
        "words": [{"w": w.text, "s": w.start_s, "e": w.end_s} for w in rec.utterance.words],
        "overall_rank": None if rec.overall_rank is None else int(rec.overall_rank),
        "interval_ranks": None
        if rec.interval_ranks is None
        else [int(r) for r in rec.interval_ranks],
    }


def dumps_record(rec: LabeledUtterance) -> str:
    return json.dumps(record_to_dict(rec), ensure_ascii=False, separators=(", ", ": "))


def iter_dataset(stream: IO[str]) -> Iterator[LabeledUtterance]:
    index = 0
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON on line {lineno}: {exc.msg}", index) from None
        yield record_from_dict(obj, index)
        index += 1


def load_dataset(path: str | Path) -> list[LabeledUtterance]:
    """Read a canonical JSONL dataset, validating every record."""
    with open(path, encoding="utf-8") as fh:
        return list(iter_dataset(fh))


def save_dataset(records: Iterable[LabeledUtterance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec))
            fh.write("\n")
