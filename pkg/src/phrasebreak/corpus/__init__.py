"""Alignment ingestion, the canonical dataset schema and synthetic corpora."""

from .alignment import PARSERS, parse_alignment, parse_textgrid, register_format
from .schema import (
    PUBLISHED_FINE_GRAINED_COUNTS,
    PUBLISHED_OVERALL_COUNTS,
    RANKS,
    AlignedUtterance,
    AlignedWord,
    LabelCounts,
    LabeledUtterance,
    Rank,
    dumps_record,
    label_counts,
    load_dataset,
    normalize_word,
    record_from_dict,
    record_to_dict,
    save_dataset,
)
from .synth import (
    DEFAULT_VOCAB,
    PROFILES,
    synthesize_corpus,
    synthesize_references,
    synthesize_two_pattern_set,
)

__all__ = [
    "PARSERS",
    "PUBLISHED_FINE_GRAINED_COUNTS",
    "PUBLISHED_OVERALL_COUNTS",
    "RANKS",
    "AlignedUtterance",
    "AlignedWord",
    "DEFAULT_VOCAB",
    "LabelCounts",
    "LabeledUtterance",
    "PROFILES",
    "Rank",
    "dumps_record",
    "label_counts",
    "load_dataset",
    "normalize_word",
    "parse_alignment",
    "parse_textgrid",
    "record_from_dict",
    "record_to_dict",
    "register_format",
    "save_dataset",
    "synthesize_corpus",
    "synthesize_references",
    "synthesize_two_pattern_set",
]
