"""Send prompts, parse answers, re-ask on malformed output."""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..errors import PhraseBreakRuntimeError
from .client import ChatClient, RateLimitError
from .prompt import PromptBundle
from .verdict import LlmVerdict, VerdictParseError, parse_verdict

logger = logging.getLogger(__name__)

FORMAT_REMINDER = (
    "Your answer did not follow the required format ({error}). Reply again with exactly "
    "two lines:\nRank: <1, 2 or 3>\nInappropriate: <none, or word brK word, ...>"
)


class ExhaustedRetriesError(PhraseBreakRuntimeError):
    def __init__(self, responses: Sequence[str], last_error: Exception | None):
        self.responses = list(responses)
        self.last_error = last_error
        super().__init__(
            f"no parseable answer after {len(self.responses)} attempt(s); last error: {last_error}"
        )


@dataclass(frozen=True)
class Backoff:
    base_s: float = 1.0
    factor: float = 2.0
    max_s: float = 60.0
    max_tries: int = 6
    jitter: float = 0.0

    def delay(self, attempt: int, hint: float | None = None) -> float:
        d = min(self.max_s, self.base_s * self.factor**attempt)
        if hint is not None:
            d = max(d, hint)
        if self.jitter:
            d *= 1 + random.uniform(-self.jitter, self.jitter)
        return d


def _call(client: ChatClient, messages, temperature, backoff: Backoff, sleep) -> str:
    for attempt in range(backoff.max_tries):
        try:
            return client.complete(messages, temperature)
        except RateLimitError as exc:
            if attempt == backoff.max_tries - 1:
                raise
            wait = backoff.delay(attempt, exc.retry_after)
            logger.warning("rate limited; retrying in %.1fs", wait)
            sleep(wait)
    raise AssertionError("unreachable")


def assess_with_llm(
    client: ChatClient,
    bundle: PromptBundle,
    retries: int = 2,
    backoff: Backoff = Backoff(),
    sleep: Callable[[float], None] = time.sleep,
) -> LlmVerdict:
    """Ask once plus up to ``retries`` format-reminder follow-ups."""
    messages = bundle.messages()
    responses: list[str] = []
    last: Exception | None = None
    for _ in range(retries + 1):
        text = _call(client, messages, bundle.temperature, backoff, sleep)
        responses.append(text)
        try:
            return parse_verdict(text, bundle.query)
        except VerdictParseError as exc:
            last = exc
            messages = messages + [
                {"role": "assistant", "content": text},
                {"role": "user", "content": FORMAT_REMINDER.format(error=exc.kind)},
            ]
    raise ExhaustedRetriesError(responses, last)


@dataclass
class AssessmentResult:
    verdict: LlmVerdict | None
    error: Exception | None = None
    responses: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.verdict is not None


def assess_many(
    client: ChatClient,
    bundles: Sequence[PromptBundle],
    retries: int = 2,
    max_in_flight: int = 4,
    backoff: Backoff = Backoff(),
    sleep: Callable[[float], None] = time.sleep,
) -> list[AssessmentResult]:
    """Assess bundles concurrently (at most ``max_in_flight``), results in input order.

    Parse exhaustion is captured per item; transport errors propagate.
    """

    def one(bundle: PromptBundle) -> AssessmentResult:
        try:
            return AssessmentResult(assess_with_llm(client, bundle, retries, backoff, sleep))
        except ExhaustedRetriesError as exc:
            return AssessmentResult(None, exc, exc.responses)

    if max_in_flight <= 1:
        return [one(b) for b in bundles]
    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        return list(pool.map(one, bundles))
