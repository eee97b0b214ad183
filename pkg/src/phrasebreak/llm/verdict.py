"""The line-oriented answer grammar and its parser.

::

    Rank: <1|2|3>
    Inappropriate: none | <w_i> <brK> <w_j>[ @<i>][, ...]

The optional ``@<i>`` suffix pins a repeated word pair to one interval;
without it a pair resolves to the earliest interval not already claimed,
preferring one whose break token also matches.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..corpus.schema import Rank
from ..errors import DataError
from ..tokenizer import BREAKS, BreakToken, TokenSequence, escape_word, unescape_word

RANK_MISSING = "rank-missing"
RANK_OUT_OF_RANGE = "rank-out-of-range"
POSITIONS_MISSING = "positions-missing"
POSITION_MALFORMED = "position-malformed"
POSITION_NOT_FOUND = "position-not-found"


class VerdictParseError(DataError):
    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


@dataclass(frozen=True)
class Position:
    index: int
    left: str
    brk: BreakToken
    right: str


@dataclass(frozen=True)
class LlmVerdict:
    rank: Rank
    positions: frozenset[Position]

    @property
    def indices(self) -> list[int]:
        return sorted(p.index for p in self.positions)

    def binary_labels(self, n_intervals: int) -> list[bool]:
        """True where the interval was flagged inappropriate."""
        flagged = set(self.indices)
        return [i in flagged for i in range(n_intervals)]


_RANK_LINE = re.compile(r"^[\s*#>_-]*rank[\s*_]*[:=]\s*(?P<v>.*)$", re.I | re.M)
_POS_LINE = re.compile(
    r"^[\s*#>_-]*inappropriate(?:[ \t]+breaks?)?[\s*_]*[:=][ \t]*(?P<v>.*)$", re.I | re.M
)
_NAMES = {"poor": Rank.POOR, "fair": Rank.FAIR, "great": Rank.GREAT}
_NONE = {"none", "n/a", "-", "[]", "{}", "nothing", "no", "null", "empty", ""}
_BY_VALUE = {b.value: b for b in BREAKS}
# Items are separated by a comma plus whitespace, unless what follows is a
# bare break token or an "@i" pin, so words such as "1,000", "etc.," or
# "so," stay intact.
_ITEM_SPLIT = re.compile(r",\s+(?!br[0-3](?:\s|$)|@\d+(?:,|\s*$))")
_DECORATION = "\"'`.;"


def _parse_rank(text: str) -> Rank:
    m = _RANK_LINE.search(text)
    if m is None:
        raise VerdictParseError(RANK_MISSING, "no 'Rank:' line found")
    value = m.group("v").strip().strip("*").strip()
    num = re.match(r"[+-]?\d+", value)
    if num:
        n = int(num.group())
        if n not in (1, 2, 3):
            raise VerdictParseError(RANK_OUT_OF_RANGE, f"rank {n} is not 1, 2 or 3")
        return Rank(n)
    word = re.match(r"[A-Za-z]+", value)
    if word and word.group().lower() in _NAMES:
        return _NAMES[word.group().lower()]
    raise VerdictParseError(RANK_MISSING, f"'Rank:' line has no usable value: {value[:40]!r}")


def _claim(query: TokenSequence, left: str, brk: BreakToken, right: str, taken: set[int]):
    words, breaks = query.words, query.breaks
    pair = [i for i in range(len(breaks)) if words[i] == left and words[i + 1] == right]
    for i in pair:
        if i not in taken and breaks[i] == brk:
            return i
    for i in pair:
        if i not in taken:
            return i
    return pair[0] if pair else None


def _resolve_item(item: str, query: TokenSequence, taken: set[int]) -> Position:
    parts = item.split()
    pinned = None
    if len(parts) == 4 and re.fullmatch(r"@\d+", parts[3]):
        pinned = int(parts[3][1:])
        parts = parts[:3]
    if len(parts) != 3 or parts[1] not in _BY_VALUE:
        raise VerdictParseError(POSITION_MALFORMED, f"expected '<word> <brK> <word>', got {item[:60]!r}")
    left, right = unescape_word(parts[0]), unescape_word(parts[2])
    brk = _BY_VALUE[parts[1]]
    if pinned is not None:
        ok = 0 <= pinned < len(query.breaks) and query.words[pinned] == left and query.words[pinned + 1] == right
        index = pinned if ok else None
    else:
        index = _claim(query, left, brk, right, taken)
    if index is None:
        raise VerdictParseError(POSITION_NOT_FOUND, f"word pair {left!r} {right!r} does not occur in the query")
    return Position(index, left, brk, right)


def _parse_positions(value: str, query: TokenSequence) -> frozenset[Position]:
    value = value.strip()
    if value.strip(" " + _DECORATION).lower() in _NONE:
        return frozenset()
    taken: set[int] = set()
    out: set[Position] = set()
    for raw in _ITEM_SPLIT.split(value):
        item = raw.strip()
        if not item:
            continue
        try:
            pos = _resolve_item(item, query, taken)
        except VerdictParseError as exc:
            # tolerate quoting and trailing sentence punctuation, but only as a fallback
            tidy = item.strip(_DECORATION).strip()
            if not tidy or tidy == item:
                raise
            try:
                pos = _resolve_item(tidy, query, taken)
            except VerdictParseError:
                raise exc from None
        if pos.index in taken:
            continue
        taken.add(pos.index)
        out.add(pos)
    return frozenset(out)


def parse_verdict(text: str, query: TokenSequence) -> LlmVerdict:
    """Parse a model answer; raises :class:`VerdictParseError` and nothing else."""
    if not isinstance(text, str):
        raise VerdictParseError(RANK_MISSING, f"response is not text: {type(text).__name__}")
    rank = _parse_rank(text)
    m = _POS_LINE.search(text)
    if m is None:
        raise VerdictParseError(POSITIONS_MISSING, "no 'Inappropriate:' line found")
    value = m.group("v")
    try:
        positions = _parse_positions(value, query)
    except VerdictParseError:
        # markdown emphasis right after the colon ("**Inappropriate:** ...")
        bare = value.strip().lstrip("*_").strip()
        if bare == value.strip():
            raise
        positions = _parse_positions(bare, query)
    return LlmVerdict(rank, positions)


def format_positions(positions, query: TokenSequence) -> str:
    """Render positions so that :func:`parse_verdict` recovers them exactly."""
    items = sorted(positions, key=lambda p: p.index)
    if not items:
        return "none"
    taken: set[int] = set()
    rendered = []
    for p in items:
        text = f"{escape_word(p.left)} {p.brk.value} {escape_word(p.right)}"
        if _claim(query, p.left, p.brk, p.right, taken) != p.index:
            text += f" @{p.index}"
        taken.add(p.index)
        rendered.append(text)
    return ", ".join(rendered)


def render_verdict(verdict: LlmVerdict, query: TokenSequence) -> str:
    return f"Rank: {int(verdict.rank)}\nInappropriate: {format_positions(verdict.positions, query)}"


def positions_from_indices(query: TokenSequence, indices) -> frozenset[Position]:
    w, b = query.words, query.breaks
    return frozenset(Position(i, w[i], b[i], w[i + 1]) for i in indices)
