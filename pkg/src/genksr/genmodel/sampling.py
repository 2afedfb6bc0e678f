"""Ancestral sampling from the trained conditional model."""
from __future__ import annotations

import numpy as np

from ..hamiltonians import HamiltonianInstance
from .embedder import embed_condition
from .network import forward
from .params import ModelParams


def sample_tokens(inst: HamiltonianInstance, t_index: int, n_samples: int,
                  p: ModelParams, g: np.random.Generator) -> np.ndarray:
    """(n_samples, sequence_length) token sequences, position by position.

    Each position draws from the model's conditional row via inverse-CDF on
    one uniform per sequence, so the output is deterministic for a given
    generator state.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    length = p.scheme.sequence_length
    if n_samples == 0:
        return np.empty((0, length), dtype=np.int64)
    c = embed_condition(inst, t_index, p)
    ctx = np.broadcast_to(c, (n_samples, c.shape[0]))
    out = np.empty((n_samples, length), dtype=np.int64)
    for pos in range(length):
        rows = forward(out[:, :pos], ctx, p)[:, -1, :]
        cdf = np.cumsum(rows, axis=1)
        cdf /= cdf[:, -1:]
        u = g.random(n_samples)
        out[:, pos] = (u[:, None] >= cdf).sum(axis=1)
    return out


def sample_records(inst: HamiltonianInstance, t_index: int, n_samples: int,
                   p: ModelParams, g: np.random.Generator):
    """Sampled sequences decoded to ShotRecords (pauli6) or bitstrings."""
    tokens = sample_tokens(inst, t_index, n_samples, p, g)
    if p.scheme.mode == "pauli6":
        return [p.scheme.decode_record(row) for row in tokens]
    return [p.scheme.decode_bits(row) for row in tokens]
