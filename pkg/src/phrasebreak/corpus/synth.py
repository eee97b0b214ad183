"""Seeded synthetic corpora standing in for TTS and learner recordings.

Every interval has an *intended* break bucket that depends only on the word
to its left (a stable CRC of the word text picks one of the profile's
buckets).  Reference readings realize the intended bucket exactly; learner
readings realize it with an utterance-level proficiency and otherwise slip
to an adjacent or a distant bucket.

Labeling rule (the generator is its own ground-truth oracle):

* interval: Great if the realized bucket equals the intended one, Fair if
  it is adjacent, Poor otherwise;
* overall: Poor if more than 20% of intervals are Poor, Great if more than
  90% are Great, Fair otherwise.  Single-word utterances are Great.

All times are rounded to 0.1 ms and labels are computed from the rounded
alignment, so a corpus survives a JSONL round trip unchanged.
"""

from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np

from ..tokenizer import BREAKS, BreakToken, bucket_duration
from .schema import AlignedUtterance, AlignedWord, LabeledUtterance, Rank

PROFILES: dict[str, tuple[BreakToken, ...]] = {
    "fluent": (BreakToken.BR0, BreakToken.BR1),
    "choppy": (BreakToken.BR2, BreakToken.BR3),
    "mixed": BREAKS,
}

DEFAULT_VOCAB: tuple[str, ...] = (
    "the", "quick", "brown", "fox", "jumps", "over", "lazy", "dog",
    "she", "reads", "books", "every", "morning", "before", "school", "and",
)

# Gap ranges per bucket keep a margin from the bucket edges so rounding
# times to 0.1 ms can never move a gap across a boundary.
_GAP_RANGES = ((0.0, 0.009), (0.012, 0.048), (0.053, 0.195), (0.205, 0.800))
_WORD_DUR = (0.15, 0.50)
_LEN_RANGE = (4, 12)
_PROFICIENCY = (0.55, 1.0)
_ADJACENT_SHARE = 2.0 / 3.0
_TIME_DECIMALS = 4

POOR_SHARE_LIMIT = 0.20
GREAT_SHARE_LIMIT = 0.90


def _crc(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def intended_bucket(word: str, profile: str) -> BreakToken:
    choices = PROFILES[profile]
    return choices[_crc(word) % len(choices)]


def interval_rank(realized: BreakToken, intended: BreakToken) -> Rank:
    d = abs(realized.index - intended.index)
    return Rank.GREAT if d == 0 else Rank.FAIR if d == 1 else Rank.POOR


def overall_rank(intervals: Sequence[Rank]) -> Rank:
    if not intervals:
        return Rank.GREAT
    n = len(intervals)
    if sum(r == Rank.POOR for r in intervals) / n > POOR_SHARE_LIMIT:
        return Rank.POOR
    if sum(r == Rank.GREAT for r in intervals) / n > GREAT_SHARE_LIMIT:
        return Rank.GREAT
    return Rank.FAIR


def _check(n_utts: int, vocab: Sequence[str], profile: str) -> None:
    if n_utts < 1:
        raise ValueError(f"n_utts must be >= 1, got {n_utts}")
    if not vocab:
        raise ValueError("vocab must not be empty")
    if profile not in PROFILES:
        raise ValueError(f"unknown gap profile {profile!r}; choose from {sorted(PROFILES)}")


def _slip(intended: BreakToken, rng: np.random.Generator) -> BreakToken:
    i = intended.index
    adjacent = [j for j in (i - 1, i + 1) if 0 <= j < 4]
    distant = [j for j in range(4) if abs(j - i) >= 2]
    if not distant or rng.random() < _ADJACENT_SHARE:
        return BREAKS[int(rng.choice(adjacent))]
    return BREAKS[int(rng.choice(distant))]


def _gap_for(bucket: BreakToken, rng: np.random.Generator) -> float:
    lo, hi = _GAP_RANGES[bucket.index]
    return float(rng.uniform(lo, hi))


def _assemble(uid: str, words: Sequence[str], buckets: Sequence[BreakToken], rng) -> AlignedUtterance:
    t = round(float(rng.uniform(0.0, 0.3)), _TIME_DECIMALS)
    out = []
    for k, w in enumerate(words):
        end = round(t + float(rng.uniform(*_WORD_DUR)), _TIME_DECIMALS)
        out.append(AlignedWord(w, t, end))
        if k < len(buckets):
            t = round(end + _gap_for(buckets[k], rng), _TIME_DECIMALS)
    return AlignedUtterance(uid, tuple(out))


def _realized(utt: AlignedUtterance) -> list[BreakToken]:
    return [bucket_duration(g) for g in utt.gaps()]


def _draw_words(rng: np.random.Generator, vocab: Sequence[str]) -> list[str]:
    n = int(rng.integers(_LEN_RANGE[0], _LEN_RANGE[1] + 1))
    return [vocab[int(k)] for k in rng.integers(0, len(vocab), size=n)]


def synthesize_corpus(
    seed: int,
    n_utts: int,
    vocab: Sequence[str] = DEFAULT_VOCAB,
    gap_profile: str = "mixed",
) -> list[LabeledUtterance]:
    """Learner-style utterances with generator-rule labels."""
    _check(n_utts, vocab, gap_profile)
    rng = np.random.default_rng(seed)
    records = []
    for u in range(n_utts):
        words = _draw_words(rng, vocab)
        proficiency = float(rng.uniform(*_PROFICIENCY))
        intended = [intended_bucket(w, gap_profile) for w in words[:-1]]
        buckets = [b if rng.random() < proficiency else _slip(b, rng) for b in intended]
        utt = _assemble(f"syn-{seed}-{u:05d}", words, buckets, rng)
        ranks = [interval_rank(r, i) for r, i in zip(_realized(utt), intended)]
        records.append(LabeledUtterance(utt, overall_rank(ranks), tuple(ranks)))
    return records


def synthesize_references(
    seed: int,
    n_utts: int,
    vocab: Sequence[str] = DEFAULT_VOCAB,
    gap_profile: str = "mixed",
) -> list[AlignedUtterance]:
    """Native/TTS-style readings: every interval realizes its intended bucket."""
    _check(n_utts, vocab, gap_profile)
    rng = np.random.default_rng(seed)
    out = []
    for u in range(n_utts):
        words = _draw_words(rng, vocab)
        buckets = [intended_bucket(w, gap_profile) for w in words[:-1]]
        out.append(_assemble(f"ref-{seed}-{u:05d}", words, buckets, rng))
    return out


# --- two-valid-patterns set ---------------------------------------------------

NO_BREAK, BREAK, OPTIONAL = 0, 1, 2


def break_policy(word: str) -> int:
    """What may follow ``word``: no break, a break, or either."""
    return _crc("policy:" + word) % 3


def _bucket_in_class(is_break: bool, rng) -> BreakToken:
    return BREAKS[int(rng.integers(2, 4)) if is_break else int(rng.integers(0, 2))]


def synthesize_two_pattern_set(
    seed: int,
    n_utts: int,
    vocab: Sequence[str] = DEFAULT_VOCAB,
) -> tuple[list[LabeledUtterance], list[AlignedUtterance]]:
    """Learner utterances where optional intervals admit two valid patterns.

    Returns the labeled learner readings and, index-aligned, one reference
    reading per text that always takes the break at optional positions.
    Interval labels are Great when the realized break/no-break class is
    allowed by :func:`break_policy` and Poor otherwise.
    """
    _check(n_utts, vocab, "mixed")
    rng = np.random.default_rng(seed)
    learners, refs = [], []
    for u in range(n_utts):
        words = _draw_words(rng, vocab)
        proficiency = float(rng.uniform(0.7, 1.0))
        policies = [break_policy(w) for w in words[:-1]]
        ref_classes = [p != NO_BREAK for p in policies]
        classes = []
        for p in policies:
            if p == OPTIONAL:
                classes.append(bool(rng.random() < 0.5))
            elif rng.random() < proficiency:
                classes.append(p == BREAK)
            else:
                classes.append(p != BREAK)
        utt = _assemble(
            f"two-{seed}-{u:05d}", words, [_bucket_in_class(c, rng) for c in classes], rng
        )
        realized = [b.is_break for b in _realized(utt)]
        ranks = [
            Rank.GREAT if p == OPTIONAL or c == (p == BREAK) else Rank.POOR
            for p, c in zip(policies, realized)
        ]
        learners.append(LabeledUtterance(utt, overall_rank(ranks), tuple(ranks)))
        refs.append(
            _assemble(f"two-{seed}-{u:05d}-ref", words, [_bucket_in_class(c, rng) for c in ref_classes], rng)
        )
    return learners, refs
