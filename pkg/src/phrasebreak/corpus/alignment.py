"""Parsers for forced-aligner output.

Two native formats are accepted:

``interval-tier``
    One interval per line, ``<start>\\t<end>\\t<word>``.  Blank lines and
    ``#`` comments are ignored, as are silence intervals (empty label or one
    of :data:`SILENCE_LABELS`).

``json-words``
    Either a bare list ``[{"w": .., "s": .., "e": ..}, ...]`` or an object
    ``{"utterance_id": .., "words": [...]}``.

Praat TextGrid files (the usual aligner export) go through
:func:`parse_textgrid`, which picks the word tier and feeds the same
normalization path.
"""

from __future__ import annotations

import io
import json
import math
import re
from typing import IO, BinaryIO, Callable, Union

from ..errors import EmptyUtteranceError, ParseError
from .schema import AlignedUtterance, AlignedWord, normalize_word

SILENCE_LABELS = frozenset({"", "sil", "sp", "spn", "<eps>", "<sil>", "<sp>", "<unk>"})

Stream = Union[BinaryIO, IO[str], bytes, str]


def _read_text(stream: Stream) -> str:
    if isinstance(stream, bytes):
        data = stream
    elif isinstance(stream, str):
        return stream
    else:
        data = stream.read()
        if isinstance(data, str):
            return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"stream is not valid UTF-8: {exc.reason}", offset=exc.start) from None


def _make_word(raw: str, start: float, end: float, line: int | None = None) -> AlignedWord | None:
    if raw.strip().lower() in SILENCE_LABELS:
        return None
    text = normalize_word(raw)
    if not text:
        return None
    if not (math.isfinite(start) and math.isfinite(end)):
        raise ParseError(f"non-finite time for word {raw!r}", line=line)
    if start < 0:
        raise ParseError(f"negative start time for word {raw!r}", line=line)
    if end <= start:
        raise ParseError(f"word {raw!r} has end {end} <= start {start}", line=line)
    # Multi-token labels ("new york") are joined so words stay whitespace-free.
    return AlignedWord("_".join(text.split()), start, end)


def _finish(utterance_id: str, words: list[AlignedWord]) -> AlignedUtterance:
    if not words:
        raise EmptyUtteranceError(f"alignment for {utterance_id!r} contains no words")
    words.sort(key=lambda w: (w.start_s, w.end_s))
    return AlignedUtterance(utterance_id, tuple(words))


def parse_interval_tier(stream: Stream, utterance_id: str = "utt") -> AlignedUtterance:
    words: list[AlignedWord] = []
    for lineno, line in enumerate(_read_text(stream).splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.rstrip("\r\n").split("\t")
        if len(parts) == 2:
            parts.append("")
        if len(parts) != 3:
            raise ParseError(
                f"expected '<start>\\t<end>\\t<word>', got {len(parts)} field(s)", line=lineno
            )
        try:
            start, end = float(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError("start/end are not numbers", line=lineno) from None
        word = _make_word(parts[2], start, end, lineno)
        if word is not None:
            words.append(word)
    return _finish(utterance_id, words)


def parse_json_words(stream: Stream, utterance_id: str = "utt") -> AlignedUtterance:
    text = _read_text(stream)
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, offset=exc.pos) from None
    if isinstance(obj, dict):
        utterance_id = obj.get("utterance_id", utterance_id)
        obj = obj.get("words")
    if not isinstance(obj, list):
        raise ParseError("expected a list of word objects")
    words: list[AlignedWord] = []
    for i, item in enumerate(obj):
        if not isinstance(item, dict) or not {"w", "s", "e"} <= set(item):
            raise ParseError(f"word entry {i} must have keys w, s, e", offset=i)
        w, s, e = item["w"], item["s"], item["e"]
        if not isinstance(w, str) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in (s, e)
        ):
            raise ParseError(f"word entry {i} has wrong field types", offset=i)
        try:
            word = _make_word(w, float(s), float(e))
        except ParseError as exc:
            raise ParseError(str(exc), offset=i) from None
        if word is not None:
            words.append(word)
    return _finish(utterance_id, words)


_TG_TIER = re.compile(r'^\s*name\s*=\s*"(?P<name>[^"]*)"', re.M)
_TG_INTERVAL = re.compile(
    r'xmin\s*=\s*(?P<s>[-\d.eE+]+)\s*xmax\s*=\s*(?P<e>[-\d.eE+]+)\s*text\s*=\s*"(?P<t>(?:[^"]|"")*)"'
)


def parse_textgrid(stream: Stream, utterance_id: str = "utt", tier: str = "words") -> AlignedUtterance:
    """Read the word tier of a long-format Praat TextGrid."""
    text = _read_text(stream)
    tiers = list(_TG_TIER.finditer(text))
    if not tiers:
        raise ParseError("no tiers found in TextGrid")
    chosen = None
    for k, m in enumerate(tiers):
        if m.group("name").lower() == tier.lower():
            end = tiers[k + 1].start() if k + 1 < len(tiers) else len(text)
            chosen = (m.end(), end)
            break
    if chosen is None:
        raise ParseError(f"tier {tier!r} not found; available: {[m.group('name') for m in tiers]}")
    body = text[chosen[0] : chosen[1]]
    words = []
    for m in _TG_INTERVAL.finditer(body):
        line = text.count("\n", 0, chosen[0] + m.start()) + 1
        word = _make_word(m.group("t").replace('""', '"'), float(m.group("s")), float(m.group("e")), line)
        if word is not None:
            words.append(word)
    return _finish(utterance_id, words)


PARSERS: dict[str, Callable[..., AlignedUtterance]] = {
    "interval-tier": parse_interval_tier,
    "json-words": parse_json_words,
    "textgrid": parse_textgrid,
}


def register_format(name: str, parser: Callable[..., AlignedUtterance]) -> None:
    """Plug in a converter for a third-party alignment format."""
    PARSERS[name] = parser


def parse_alignment(stream: Stream, format: str, utterance_id: str = "utt") -> AlignedUtterance:
    try:
        parser = PARSERS[format]
    except KeyError:
        raise ValueError(f"unknown alignment format {format!r}; known: {sorted(PARSERS)}") from None
    if isinstance(stream, str) and not isinstance(stream, io.IOBase):
        stream = stream.encode("utf-8")
    return parser(stream, utterance_id=utterance_id)
