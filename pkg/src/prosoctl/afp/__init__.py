"""Acoustic feature predictor: embeddings into a stacked BiLSTM trunk."""

from prosoctl.afp.gradcheck import gradient_check
from prosoctl.afp.model import (AfpCheckpoint, AfpDims, UnknownSpeakerError,
                                afp_forward, init_checkpoint, load_checkpoint,
                                save_checkpoint)
from prosoctl.afp.train import TrainConfig, TrainingDivergedError, afp_loss, afp_train

__all__ = [
    "AfpCheckpoint",
    "AfpDims",
    "TrainConfig",
    "TrainingDivergedError",
    "UnknownSpeakerError",
    "afp_forward",
    "afp_loss",
    "afp_train",
    "gradient_check",
    "init_checkpoint",
    "load_checkpoint",
    "save_checkpoint",
]
