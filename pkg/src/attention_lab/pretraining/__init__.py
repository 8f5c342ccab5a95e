"""Masked Audio Model pretraining and attention analysis"""

from .analysis import (
    PATTERN_LABELS,
    PCAProjection,
    PatternLabel,
    classify_heads,
    classify_pattern,
    flatten_attention,
    pattern_report,
    pattern_summary,
    pca_project,
    write_embedding_csv,
)
from .data import MaskingWarning, SequenceBatch, SyntheticAudioGenerator, mam_mask
from .trainer import MAMTrainer, TrainConfig, TrainResult, reconstruction_loss, train, write_loss_csv

__all__ = [
    "MAMTrainer", "MaskingWarning", "PATTERN_LABELS", "PCAProjection", "PatternLabel",
    "SequenceBatch", "SyntheticAudioGenerator", "TrainConfig", "TrainResult",
    "classify_heads", "classify_pattern", "flatten_attention", "mam_mask",
    "pattern_report", "pattern_summary", "pca_project", "reconstruction_loss", "train",
    "write_embedding_csv", "write_loss_csv",
]
