"""Word/break token sequences built from inter-word gap durations."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence, Union

if TYPE_CHECKING:
    from .corpus.schema import AlignedUtterance


class BreakToken(enum.Enum):
    BR0 = "br0"
    BR1 = "br1"
    BR2 = "br2"
    BR3 = "br3"

    @property
    def index(self) -> int:
        return _BREAK_INDEX[self]

    @classmethod
    def from_index(cls, i: int) -> "BreakToken":
        return BREAKS[i]

    @property
    def is_break(self) -> bool:
        """Binarized view: br2/br3 are audible breaks, br0/br1 are not."""
        return self.index >= 2

    def __str__(self) -> str:
        return self.value


BREAKS: tuple[BreakToken, ...] = tuple(BreakToken)
_BREAK_INDEX = {b: i for i, b in enumerate(BREAKS)}

# Upper bounds (inclusive) of br0, br1, br2 in seconds; anything longer is br3.
BUCKET_EDGES_S: tuple[float, float, float] = (0.010, 0.050, 0.200)


def bucket_duration(gap: float) -> BreakToken:
    """Map a silence duration in seconds onto its break token.

    Intervals are open below and closed above, and gaps at or below zero
    (touching or overlapping words) count as no break.
    """
    if not math.isfinite(gap):
        raise ValueError(f"gap must be finite, got {gap!r}")
    for i, edge in enumerate(BUCKET_EDGES_S):
        if gap <= edge:
            return BREAKS[i]
    return BreakToken.BR3


Token = Union[str, BreakToken]


@dataclass(frozen=True)
class TokenSequence:
    """Interleaved ``w0 b0 w1 ... b(n-2) w(n-1)``."""

    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        toks = tuple(self.tokens)
        object.__setattr__(self, "tokens", toks)
        if len(toks) % 2 != 1:
            raise ValueError(f"token sequence must have odd length, got {len(toks)}")
        for i, tok in enumerate(toks):
            if i % 2 == 0:
                if not isinstance(tok, str) or not tok or any(c.isspace() for c in tok):
                    raise ValueError(f"position {i} must be a non-empty word, got {tok!r}")
            elif not isinstance(tok, BreakToken):
                raise ValueError(f"position {i} must be a break token, got {tok!r}")

    @classmethod
    def from_parts(cls, words: Sequence[str], breaks: Sequence[BreakToken]) -> "TokenSequence":
        if len(breaks) != len(words) - 1:
            raise ValueError("need exactly one break between each pair of words")
        toks: list[Token] = [words[0]]
        for b, w in zip(breaks, words[1:]):
            toks.extend((b, w))
        return cls(tuple(toks))

    @property
    def word_count(self) -> int:
        return (len(self.tokens) + 1) // 2

    @property
    def words(self) -> tuple[str, ...]:
        return self.tokens[0::2]  # type: ignore[return-value]

    @property
    def breaks(self) -> tuple[BreakToken, ...]:
        return self.tokens[1::2]  # type: ignore[return-value]

    def break_positions(self) -> list[tuple[int, BreakToken]]:
        """``(token_position, break)`` for every break, in order."""
        return [(2 * i + 1, b) for i, b in enumerate(self.breaks)]

    def with_breaks(self, breaks: Sequence[BreakToken]) -> "TokenSequence":
        return TokenSequence.from_parts(self.words, breaks)

    def __len__(self) -> int:
        return len(self.tokens)

    def __str__(self) -> str:
        return render(self)


def tokenize(utt: "AlignedUtterance") -> TokenSequence:
    words = [w.text for w in utt.words]
    breaks = [bucket_duration(g) for g in utt.gaps()]
    return TokenSequence.from_parts(words, breaks)


_BREAK_LITERAL = re.compile(r"^\\*br[0-3]$")
_BY_VALUE = {b.value: b for b in BREAKS}


def escape_word(word: str) -> str:
    """Words that look like break literals get one extra leading backslash."""
    return "\\" + word if _BREAK_LITERAL.match(word) else word


def unescape_word(token: str) -> str:
    return token[1:] if _BREAK_LITERAL.match(token) and token.startswith("\\") else token


def render(seq: TokenSequence) -> str:
    return " ".join(
        tok.value if isinstance(tok, BreakToken) else escape_word(tok) for tok in seq.tokens
    )


def parse(text: str) -> TokenSequence:
    """Inverse of :func:`render`."""
    parts = text.split()
    if not parts:
        raise ValueError("empty token sequence")
    toks: list[Token] = []
    for i, part in enumerate(parts):
        if i % 2 == 1:
            if part not in _BY_VALUE:
                raise ValueError(f"expected a break token at position {i}, got {part!r}")
            toks.append(_BY_VALUE[part])
        else:
            if part in _BY_VALUE:
                raise ValueError(f"expected a word at position {i}, got break {part!r}")
            toks.append(unescape_word(part))
    return TokenSequence(tuple(toks))


def tokenize_all(utts: Iterable["AlignedUtterance"]) -> list[TokenSequence]:
    return [tokenize(u) for u in utts]
