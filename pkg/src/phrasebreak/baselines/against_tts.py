"""Break-pattern similarity against a reference (native or TTS) reading."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

from ..corpus.schema import AlignedUtterance, Rank, load_dataset
from ..errors import DataError, WordMismatchError
from ..tokenizer import TokenSequence, tokenize

Similarity = Callable[[TokenSequence, TokenSequence], float]

# Lower edges of Fair and Great; each bin is closed below and open above,
# except Great which includes 1.0.
FAIR_FROM = 0.3
GREAT_FROM = 0.7


def check_words(test: TokenSequence, ref: TokenSequence) -> None:
    for i in range(max(test.word_count, ref.word_count)):
        a = test.words[i] if i < test.word_count else None
        b = ref.words[i] if i < ref.word_count else None
        if a != b:
            raise WordMismatchError(i, a, b)


def binarized_agreement(test: TokenSequence, ref: TokenSequence) -> float:
    """Share of intervals whose break/no-break class matches (br0/br1 vs br2/br3)."""
    pairs = list(zip(test.breaks, ref.breaks))
    if not pairs:
        return 1.0
    return sum(a.is_break == b.is_break for a, b in pairs) / len(pairs)


def category_agreement(test: TokenSequence, ref: TokenSequence) -> float:
    """Share of intervals with the identical four-way break token."""
    pairs = list(zip(test.breaks, ref.breaks))
    if not pairs:
        return 1.0
    return sum(a == b for a, b in pairs) / len(pairs)


def rank_from_similarity(similarity: float) -> Rank:
    if not 0.0 <= similarity <= 1.0:
        raise ValueError(f"similarity must lie in [0, 1], got {similarity}")
    if similarity >= GREAT_FROM:
        return Rank.GREAT
    if similarity >= FAIR_FROM:
        return Rank.FAIR
    return Rank.POOR


def against_tts_score(
    test: TokenSequence, ref: TokenSequence, similarity: Similarity = binarized_agreement
) -> tuple[float, Rank]:
    check_words(test, ref)
    s = similarity(test, ref)
    return s, rank_from_similarity(s)


def against_tts_intervals(test: TokenSequence, ref: TokenSequence) -> list[Rank]:
    """Per-interval ranks: each interval's agreement (1 or 0) through the same thresholds."""
    check_words(test, ref)
    return [rank_from_similarity(float(a.is_break == b.is_break)) for a, b in zip(test.breaks, ref.breaks)]


class TTSClient(Protocol):
    """Anything that can produce an aligned reference reading for a word sequence."""

    def reference_for(self, words: Sequence[str]) -> AlignedUtterance: ...


class ReferenceBank:
    """Offline reference readings keyed by their word sequence."""

    def __init__(self, refs: Sequence[AlignedUtterance]):
        self._by_words: dict[tuple[str, ...], TokenSequence] = {}
        for utt in refs:
            seq = tokenize(utt)
            self._by_words.setdefault(seq.words, seq)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ReferenceBank":
        return cls([r.utterance for r in load_dataset(path)])

    def __len__(self) -> int:
        return len(self._by_words)

    def __contains__(self, words: object) -> bool:
        return tuple(words) in self._by_words  # type: ignore[arg-type]

    def reference_for(self, words: Sequence[str]) -> TokenSequence:
        try:
            return self._by_words[tuple(words)]
        except KeyError:
            raise DataError(f"no reference reading for: {' '.join(words)!r}") from None

    def as_mapping(self) -> Mapping[tuple[str, ...], TokenSequence]:
        return dict(self._by_words)


class ClientReferences:
    """Fetches references from a :class:`TTSClient`, caching per word sequence."""

    def __init__(self, client: TTSClient):
        self.client = client
        self._cache: dict[tuple[str, ...], TokenSequence] = {}

    def reference_for(self, words: Sequence[str]) -> TokenSequence:
        key = tuple(words)
        if key not in self._cache:
            self._cache[key] = tokenize(self.client.reference_for(key))
        return self._cache[key]
