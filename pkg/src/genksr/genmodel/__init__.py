"""Conditional autoregressive model over measurement records."""
from .backbones import op_counter, reset_op_counter
from .embedder import embed_condition
from .network import TokenBatch, forward, gradients, nll
from .params import (DEFAULT_HYPER, ModelParams, init_params, load_checkpoint,
                     save_checkpoint)
from .sampling import sample_records, sample_tokens
from .tokens import TokenScheme
from .training import AdamState, TrainConfig, TrainingDiverged, adam_update, train

__all__ = [
    "AdamState",
    "DEFAULT_HYPER",
    "ModelParams",
    "TokenBatch",
    "TokenScheme",
    "TrainConfig",
    "TrainingDiverged",
    "adam_update",
    "embed_condition",
    "forward",
    "gradients",
    "init_params",
    "load_checkpoint",
    "nll",
    "op_counter",
    "reset_op_counter",
    "sample_records",
    "sample_tokens",
    "save_checkpoint",
    "train",
]
