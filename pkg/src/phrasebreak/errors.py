"""Exception hierarchy shared by every module.

The CLI maps the top-level families onto exit codes, so new errors should
subclass one of ``ConfigError``, ``DataError``, ``PhraseBreakRuntimeError``
or ``NetworkError``.
"""

from __future__ import annotations


class PhraseBreakError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(PhraseBreakError):
    """Invalid configuration value or incompatible settings."""


class DataError(PhraseBreakError):
    """Input data that violates a schema or invariant."""


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None, offset: int | None = None):
        self.line = line
        self.offset = offset
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class EmptyUtteranceError(DataError):
    pass


class SchemaError(DataError):
    def __init__(self, message: str, index: int | None = None, field: str | None = None):
        self.index = index
        self.field = field
        prefix = ""
        if index is not None:
            prefix += f"record {index}: "
        if field is not None:
            prefix += f"field '{field}': "
        super().__init__(prefix + message)


class UncorruptibleError(DataError):
    """Raised when a sequence has no break token to replace."""


class MissingLabelsError(DataError):
    def __init__(self, task: str, utterance_ids: list[str]):
        self.utterance_ids = list(utterance_ids)
        shown = ", ".join(self.utterance_ids[:20])
        more = "" if len(self.utterance_ids) <= 20 else f" (+{len(self.utterance_ids) - 20} more)"
        super().__init__(f"{len(self.utterance_ids)} record(s) lack {task} labels: {shown}{more}")


class WordMismatchError(DataError):
    def __init__(self, index: int, test_word: str | None, ref_word: str | None):
        self.index = index
        super().__init__(
            f"word sequences diverge at index {index}: test={test_word!r} ref={ref_word!r}"
        )


class PhraseBreakRuntimeError(PhraseBreakError):
    """Failures while training, predicting or running an experiment."""


class StageMismatchError(PhraseBreakRuntimeError):
    pass


class NetworkError(PhraseBreakError):
    """Transport-level failure talking to a remote service."""
