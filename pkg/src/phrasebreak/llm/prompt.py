"""Prompt assembly and few-shot selection."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from ..corpus.schema import LabeledUtterance, Rank
from ..errors import MissingLabelsError
from ..tokenizer import TokenSequence, render, tokenize
from .verdict import format_positions, positions_from_indices

RUBRIC_VERSION = "v1"
FAITHFUL_SHOT_COUNTS = (0, 4)


def load_rubric(version: str = RUBRIC_VERSION) -> str:
    return resources.files(__package__).joinpath(f"assets/rubric_{version}.txt").read_text("utf-8")


@dataclass(frozen=True)
class Shot:
    sequence: TokenSequence
    rank: Rank
    positions: tuple[int, ...]

    @classmethod
    def from_labeled(cls, rec: LabeledUtterance) -> "Shot":
        if rec.overall_rank is None or rec.interval_ranks is None:
            raise MissingLabelsError("overall and interval", [rec.utterance_id])
        bad = tuple(i for i, r in enumerate(rec.interval_ranks) if r != Rank.GREAT)
        return cls(tokenize(rec.utterance), rec.overall_rank, bad)

    def answer(self) -> str:
        pos = positions_from_indices(self.sequence, self.positions)
        return f"Rank: {int(self.rank)}\nInappropriate: {format_positions(pos, self.sequence)}"


@dataclass(frozen=True)
class PromptBundle:
    preamble: str
    shots: tuple[Shot, ...]
    query: TokenSequence
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def user_text(self) -> str:
        parts = []
        if self.shots:
            parts.append("Here are assessed examples.")
            for k, shot in enumerate(self.shots, start=1):
                parts.append(f"Example {k}\nSpeech: {render(shot.sequence)}\n{shot.answer()}")
            parts.append("Now assess this speech.")
        parts.append(f"Speech: {render(self.query)}")
        return "\n\n".join(parts)

    def messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.preamble},
            {"role": "user", "content": self.user_text()},
        ]

    def digest(self) -> str:
        return prompt_digest(self.messages(), self.temperature)


def prompt_digest(messages: Sequence[dict[str, str]], temperature: float) -> str:
    blob = json.dumps({"messages": list(messages), "temperature": temperature}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def build_prompt(
    query: TokenSequence,
    shots: Sequence[LabeledUtterance] = (),
    rubric: str | None = None,
    temperature: float = 0.0,
    faithful: bool = True,
) -> PromptBundle:
    """Zero-shot when ``shots`` is empty, otherwise examples precede the query."""
    if query is None or not query.tokens:
        raise ValueError("empty query")
    if faithful and len(shots) not in FAITHFUL_SHOT_COUNTS:
        raise ValueError(
            f"faithful mode takes {FAITHFUL_SHOT_COUNTS} shots, got {len(shots)}; "
            "pass faithful=False to experiment"
        )
    return PromptBundle(
        preamble=(rubric if rubric is not None else load_rubric()).strip(),
        shots=tuple(Shot.from_labeled(s) for s in shots),
        query=query,
        temperature=temperature,
    )


def select_shots(
    pool: Sequence[LabeledUtterance], k: int = 4, seed: int = 0, index: int = 0
) -> list[LabeledUtterance]:
    """Uniform draw without replacement, fixed per ``(seed, test example index)``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if len(pool) < k:
        raise ValueError(f"need at least {k} training examples for shots, pool has {len(pool)}")
    rng = np.random.default_rng([seed, index])
    picks = rng.choice(len(pool), size=k, replace=False)
    return [pool[int(i)] for i in picks]
