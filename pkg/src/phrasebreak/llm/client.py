"""Chat-completion backends: live HTTP, transcript replay/recording, and mocks."""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

from ..errors import ConfigError, NetworkError
from ..tokenizer import BREAKS, TokenSequence, parse
from .prompt import prompt_digest
from .verdict import format_positions, positions_from_indices

Messages = Sequence[dict[str, str]]


class ChatClient(Protocol):
    def complete(self, messages: Messages, temperature: float = 0.0) -> str: ...


class LlmTransportError(NetworkError):
    pass


class RateLimitError(LlmTransportError):
    def __init__(self, message: str, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(message)


class ReplayMissError(LlmTransportError):
    """A replay client was asked for a prompt it has no recording of."""


@dataclass(frozen=True)
class ClientSettings:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key: str | None = None
    model: str = "gpt-3.5-turbo"
    timeout: float = 60.0

    @classmethod
    def from_env(cls, environ=os.environ) -> "ClientSettings":
        d = cls()
        try:
            timeout = float(environ.get("PHRASEBREAK_LLM_TIMEOUT", d.timeout))
        except ValueError:
            raise ConfigError("PHRASEBREAK_LLM_TIMEOUT must be a number") from None
        return cls(
            endpoint=environ.get("PHRASEBREAK_LLM_ENDPOINT", d.endpoint),
            api_key=environ.get("PHRASEBREAK_LLM_API_KEY"),
            model=environ.get("PHRASEBREAK_LLM_MODEL", d.model),
            timeout=timeout,
        )


class HttpChatClient:
    """OpenAI-compatible ``/chat/completions`` endpoint over httpx."""

    def __init__(self, settings: ClientSettings, transport=None):
        import httpx

        if not settings.api_key:
            raise ConfigError("PHRASEBREAK_LLM_API_KEY is not set")
        self.settings = settings
        self._http = httpx.Client(timeout=settings.timeout, transport=transport)
        self._httpx = httpx

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        body = {"model": self.settings.model, "messages": list(messages), "temperature": temperature}
        headers = {"Authorization": f"Bearer {self.settings.api_key}"}
        try:
            resp = self._http.post(self.settings.endpoint, json=body, headers=headers)
        except self._httpx.HTTPError as exc:
            raise LlmTransportError(f"request failed: {exc}") from exc
        if resp.status_code == 429:
            after = resp.headers.get("retry-after")
            raise RateLimitError("rate limited", float(after) if after and after.isdigit() else None)
        if resp.status_code >= 400:
            raise LlmTransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise LlmTransportError("response body has no choices[0].message.content") from None


def _read_transcripts(path: Path) -> dict[str, str]:
    out: dict[str, str] = {}
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    out[rec["prompt_digest"]] = rec["response_text"]
    return out


class ReplayClient:
    """Answers from a transcript cache (JSONL ``prompt_digest``/``response_text``)."""

    def __init__(self, transcripts: dict[str, str] | str | Path):
        self.transcripts = (
            dict(transcripts) if isinstance(transcripts, dict) else _read_transcripts(Path(transcripts))
        )

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        key = prompt_digest(messages, temperature)
        try:
            return self.transcripts[key]
        except KeyError:
            raise ReplayMissError(f"no recorded response for prompt {key[:12]}") from None


class RecordingClient:
    """Wraps another client and appends every exchange to a transcript cache."""

    def __init__(self, inner: ChatClient, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        text = self.inner.complete(messages, temperature)
        rec = {"prompt_digest": prompt_digest(messages, temperature), "response_text": text}
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        return text


class ScriptedClient:
    """Returns canned responses in order (cycling), or computes them with ``fn``."""

    def __init__(self, responses: Iterable[str] | Callable[[Messages], str]):
        self._fn = responses if callable(responses) else None
        self._responses = [] if callable(responses) else list(responses)
        self._i = 0
        self._lock = threading.Lock()
        self.calls: list[list[dict[str, str]]] = []

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        with self._lock:
            self.calls.append([dict(m) for m in messages])
            if self._fn is not None:
                return self._fn(messages)
            text = self._responses[self._i % len(self._responses)]
            self._i += 1
            return text


_SPEECH = re.compile(r"^Speech: (.+)$", re.M)


def query_from_messages(messages: Messages) -> TokenSequence:
    """The last ``Speech:`` line of the final user turn, parsed back to tokens."""
    for m in reversed(messages):
        if m["role"] == "user":
            found = _SPEECH.findall(m["content"])
            if found:
                return parse(found[-1])
    raise ValueError("no 'Speech:' line in the conversation")


class HeuristicClient:
    """Offline stand-in assessor that flags every long (``br3``) break.

    Rank follows the share of flagged intervals.  Deterministic, so whole
    pipelines can run without a network.
    """

    def complete(self, messages: Messages, temperature: float = 0.0) -> str:
        query = query_from_messages(messages)
        flagged = []
        for i, b in enumerate(query.breaks):
            if b is BREAKS[3]:
                flagged.append(i)
        share = len(flagged) / max(len(query.breaks), 1)
        rank = 3 if share == 0 else 2 if share <= 0.25 else 1
        return f"Rank: {rank}\nInappropriate: {format_positions(positions_from_indices(query, flagged), query)}"
