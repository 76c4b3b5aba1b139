"""The encoder-decoder supertagger: numerics, network, training, decoding, persistence."""

from .decoding import Decoded, greedy_decode
from .functional import gelu, log_sigsoftmax, loss_kl_smoothed, lr_schedule, sigsoftmax, smoothed_targets
from .network import ModelConfig, ShapeMismatch, TaggerNetwork, sinusoidal_positions
from .persist import (
    CheckpointError,
    cosine_similarity,
    export_symbol_embeddings,
    load_checkpoint,
    load_symbol_embeddings,
    save_checkpoint,
)
from .training import Batch, Divergence, Supertagger, TrainLog, batch_loss, forward_teacher_forced, make_batch, train
from .words import UNK, MissingVectors, Precomputed, TrainableLookup, WordRepProvider

__all__ = [
    "Batch", "CheckpointError", "Decoded", "Divergence", "MissingVectors", "ModelConfig", "Precomputed",
    "ShapeMismatch", "Supertagger", "TaggerNetwork", "TrainLog", "TrainableLookup", "UNK", "WordRepProvider",
    "batch_loss", "cosine_similarity", "export_symbol_embeddings", "forward_teacher_forced", "gelu",
    "greedy_decode", "load_checkpoint", "load_symbol_embeddings", "log_sigsoftmax", "loss_kl_smoothed",
    "lr_schedule", "make_batch", "save_checkpoint", "sigsoftmax", "sinusoidal_positions", "smoothed_targets",
    "train",
]
