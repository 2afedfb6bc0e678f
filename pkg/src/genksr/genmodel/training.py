"""Adam training loop with deterministic shuffling and early stopping.

Training is a pure function of (dataset, config, architecture): the holdout
split and every epoch's shuffle derive from the master seed, so reruns
reproduce the loss trace and the final parameters exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng
from .network import TokenBatch, gradients, nll
from .params import ModelParams, init_params
from .tokens import TokenScheme


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 50
    adam_betas: tuple[float, float] = (0.9, 0.999)
    grad_clip: float = 1.0
    early_stop_patience: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def fresh(cls, params: ModelParams) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like())


def adam_update(params: ModelParams, grads: dict[str, np.ndarray],
                state: AdamState, cfg: TrainConfig) -> None:
    gn = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    scale = cfg.grad_clip / gn if cfg.grad_clip > 0 and gn > cfg.grad_clip else 1.0
    b1, b2 = cfg.adam_betas
    state.step += 1
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, g in grads.items():
        g = g * scale
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        mhat = state.m[name] / corr1
        vhat = state.v[name] / corr2
        params.tensors[name] -= cfg.learning_rate * mhat / (np.sqrt(vhat) + 1e-8)


def _eval_nll(batch: TokenBatch, params: ModelParams, chunk: int) -> float:
    total = 0.0
    for start in range(0, len(batch), chunk):
        sub = batch.take(slice(start, start + chunk))
        total += nll(sub, params) * len(sub)
    return total / len(batch)


HOLDOUT_FRACTION = 0.1


def train(dataset: TokenBatch, cfg: TrainConfig,
          hyper: dict | None = None,
          init: ModelParams | None = None,
          scheme: TokenScheme | None = None):
    """Fit the model; returns (best params, per-epoch loss trace).

    A deterministic 10% holdout drives early stopping; the returned
    parameters are the best-held-out snapshot. Trace rows are dicts with
    epoch, train_nll, val_nll.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if init is not None:
        params = init.copy()
    else:
        if scheme is None:
            raise ValueError("need a TokenScheme when training from scratch")
        params = init_params(scheme, hyper)
    if dataset.tokens.shape[1] != params.scheme.sequence_length:
        raise ValueError("dataset sequence length does not match the scheme")

    order = rng.stream(cfg.master_seed, "holdout-split").permutation(len(dataset))
    n_val = max(1, int(round(HOLDOUT_FRACTION * len(dataset)))) if len(dataset) > 4 else 1
    val_set = dataset.take(order[:n_val])
    train_set = dataset.take(order[n_val:])
    if len(train_set) == 0:
        train_set = val_set

    state = AdamState.fresh(params)
    trace: list[dict] = []
    best_val = np.inf
    best_tensors = None
    stall = 0
    for epoch in range(cfg.max_epochs):
        perm = rng.stream(cfg.master_seed, "epoch-shuffle", epoch).permutation(len(train_set))
        epoch_loss = 0.0
        seen = 0
        for start in range(0, len(perm), cfg.batch_size):
            sub = train_set.take(perm[start:start + cfg.batch_size])
            loss, grads = gradients(sub, params)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"loss became {loss} at epoch {epoch}")
            adam_update(params, grads, state, cfg)
            epoch_loss += loss * len(sub)
            seen += len(sub)
        train_nll = epoch_loss / seen
        val_nll = _eval_nll(val_set, params, cfg.batch_size)
        if not np.isfinite(val_nll):
            raise TrainingDiverged(f"held-out loss became {val_nll} at epoch {epoch}")
        trace.append({"epoch": epoch, "train_nll": train_nll, "val_nll": val_nll})
        if val_nll < best_val - 1e-9:
            best_val = val_nll
            best_tensors = {k: v.copy() for k, v in params.tensors.items()}
            stall = 0
        else:
            stall += 1
            if stall >= cfg.early_stop_patience:
                break
    if best_tensors is not None:
        params.tensors = best_tensors
    return params, trace
