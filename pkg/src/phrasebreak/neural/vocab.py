"""Word-piece vocabulary with four atomic break tokens.

Ids 0-3 are ``[PAD] [UNK] [CLS] [SEP]`` and ids 4-7 are ``br0``-``br3``;
break tokens are never split.  Words are segmented by greedy
longest-match-first over an inventory of whole words, initial characters
and ``##``-prefixed continuation characters.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..tokenizer import BREAKS, TokenSequence

logger = logging.getLogger(__name__)

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
PAD_ID, UNK_ID, CLS_ID, SEP_ID = range(4)
BREAK_IDS = tuple(range(len(SPECIALS), len(SPECIALS) + len(BREAKS)))
_RESERVED = SPECIALS + tuple(b.value for b in BREAKS)


@dataclass(frozen=True)
class Encoded:
    ids: tuple[int, ...]
    break_positions: tuple[int, ...]
    n_breaks: int

    @property
    def truncated(self) -> bool:
        return len(self.break_positions) < self.n_breaks


class Vocab:
    def __init__(self, pieces: Sequence[str]):
        pieces = tuple(pieces)
        if pieces[: len(_RESERVED)] != _RESERVED:
            raise ValueError("vocabulary must start with the reserved special and break tokens")
        if len(set(pieces)) != len(pieces):
            raise ValueError("duplicate vocabulary pieces")
        self.pieces = pieces
        self._index = {p: i for i, p in enumerate(pieces)}
        self._max_piece = max(len(p) for p in pieces)
        self._cache: dict[str, tuple[int, ...]] = {}

    @classmethod
    def build(cls, words: Iterable[str], max_words: int | None = None) -> "Vocab":
        counts = Counter(words)
        chars: set[str] = set()
        for w in counts:
            chars.update(w)
        ranked = sorted(counts, key=lambda w: (-counts[w], w))
        whole = [w for w in ranked if w not in _RESERVED and len(w) > 1]
        if max_words is not None:
            whole = whole[:max_words]
        char_pieces = sorted(chars) + ["##" + c for c in sorted(chars)]
        seen = set(_RESERVED)
        out = list(_RESERVED)
        for p in char_pieces + whole:
            if p not in seen:
                seen.add(p)
                out.append(p)
        return cls(out)

    @classmethod
    def from_sequences(cls, seqs: Iterable[TokenSequence], max_words: int | None = None) -> "Vocab":
        return cls.build((w for s in seqs for w in s.words), max_words)

    def __len__(self) -> int:
        return len(self.pieces)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self.pieces == other.pieces

    pad_id = PAD_ID

    def word_ids(self, word: str) -> tuple[int, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        if word in self._index and word not in _RESERVED:
            ids: tuple[int, ...] = (self._index[word],)
        else:
            ids = self._greedy(word)
        self._cache[word] = ids
        return ids

    def _greedy(self, word: str) -> tuple[int, ...]:
        out = []
        start = 0
        while start < len(word):
            end = min(len(word), start + self._max_piece)
            found = None
            while end > start:
                piece = word[start:end] if start == 0 else "##" + word[start:end]
                if piece in self._index and piece not in _RESERVED:
                    found = self._index[piece]
                    break
                end -= 1
            if found is None:
                return (UNK_ID,)
            out.append(found)
            start = end
        return tuple(out)

    def encode(self, seq: TokenSequence, max_len: int) -> Encoded:
        """``[CLS] pieces(w0) br pieces(w1) ... [SEP]``, truncated on the right."""
        ids = [CLS_ID]
        positions = []
        for tok in seq.tokens:
            if isinstance(tok, str):
                ids.extend(self.word_ids(tok))
            else:
                positions.append(len(ids))
                ids.append(BREAK_IDS[tok.index])
        if len(ids) + 1 > max_len:
            total = len(ids) + 1
            ids = ids[: max_len - 1]
            kept = [p for p in positions if p < max_len - 1]
            logger.warning(
                "sequence of %d pieces truncated to max_len=%d; %d of %d breaks kept",
                total, max_len, len(kept), len(positions),
            )
        else:
            kept = positions
        ids.append(SEP_ID)
        return Encoded(tuple(ids), tuple(kept), len(positions))

    def to_dict(self) -> dict:
        return {"kind": "wordpiece", "pieces": list(self.pieces)}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocab":
        if d.get("kind") != "wordpiece":
            raise ValueError(f"not a word-piece vocabulary: {d.get('kind')!r}")
        return cls(d["pieces"])
