"""Prompted LLM assessment: prompt building, clients and answer parsing."""

from .assess import AssessmentResult, Backoff, ExhaustedRetriesError, assess_many, assess_with_llm
from .client import (
    ChatClient,
    ClientSettings,
    HeuristicClient,
    HttpChatClient,
    LlmTransportError,
    RateLimitError,
    RecordingClient,
    ReplayClient,
    ReplayMissError,
    ScriptedClient,
    query_from_messages,
)
from .prompt import (
    RUBRIC_VERSION,
    PromptBundle,
    Shot,
    build_prompt,
    load_rubric,
    prompt_digest,
    select_shots,
)
from .verdict import (
    LlmVerdict,
    Position,
    VerdictParseError,
    parse_verdict,
    positions_from_indices,
    render_verdict,
)

__all__ = [
    "RUBRIC_VERSION",
    "AssessmentResult",
    "Backoff",
    "ChatClient",
    "ClientSettings",
    "ExhaustedRetriesError",
    "HeuristicClient",
    "HttpChatClient",
    "LlmTransportError",
    "LlmVerdict",
    "Position",
    "PromptBundle",
    "RateLimitError",
    "RecordingClient",
    "ReplayClient",
    "ReplayMissError",
    "ScriptedClient",
    "Shot",
    "VerdictParseError",
    "assess_many",
    "assess_with_llm",
    "build_prompt",
    "load_rubric",
    "parse_verdict",
    "positions_from_indices",
    "prompt_digest",
    "query_from_messages",
    "render_verdict",
    "select_shots",
]
