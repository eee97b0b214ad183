"""Comparison systems: Bi-LSTM(+CRF) and against-TTS similarity."""

from .against_tts import (
    ClientReferences,
    ReferenceBank,
    TTSClient,
    against_tts_intervals,
    against_tts_score,
    binarized_agreement,
    category_agreement,
    rank_from_similarity,
)
from .bilstm import BiLSTMConfig, BiLSTMPredictor, bilstm_crf_fine_grained, bilstm_overall
from .crf import CRF, log_partition, path_score

__all__ = [
    "CRF",
    "BiLSTMConfig",
    "BiLSTMPredictor",
    "ClientReferences",
    "ReferenceBank",
    "TTSClient",
    "against_tts_intervals",
    "against_tts_score",
    "bilstm_crf_fine_grained",
    "bilstm_overall",
    "binarized_agreement",
    "category_agreement",
    "log_partition",
    "path_score",
    "rank_from_similarity",
]
