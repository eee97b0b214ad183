"""Break-aware encoder, its three heads, and the training/inference loops."""

from .checkpoint import FORMAT_VERSION, Checkpoint
from .config import EncoderConfig, TrainConfig
from .encoder import STAGES, BreakModel, ToyEncoder, masked_token_loss
from .train import (
    DegenerateTrainingWarning,
    FineGrainedPrediction,
    IntervalAssessment,
    Predictor,
    discriminator_scores,
    finetune_fine_grained,
    finetune_overall,
    load_model,
    predict_fine_grained,
    predict_overall,
    pretrain_discriminator,
)
from .vocab import Vocab

__all__ = [
    "FORMAT_VERSION",
    "STAGES",
    "BreakModel",
    "Checkpoint",
    "DegenerateTrainingWarning",
    "EncoderConfig",
    "FineGrainedPrediction",
    "IntervalAssessment",
    "Predictor",
    "ToyEncoder",
    "TrainConfig",
    "Vocab",
    "discriminator_scores",
    "finetune_fine_grained",
    "finetune_overall",
    "load_model",
    "masked_token_loss",
    "predict_fine_grained",
    "predict_overall",
    "pretrain_discriminator",
]
