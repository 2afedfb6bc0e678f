"""Full conditional model: embeddings + context fusion + backbone + softmax head.

`forward` maps an observed prefix to next-token probability rows (row i
predicts position i+1 from tokens 1..i, with a reserved begin-of-sequence
embedding supplying the first conditional). `nll` and `gradients` run the
exact reverse-mode pass over every tensor, including the condition embedder.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..hamiltonians import HamiltonianInstance
from .backbones import block_bw, block_fw
from .embedder import embed_condition_bw, embed_condition_fw
from .layers import layernorm_bw, layernorm_fw, softmax_rows
from .params import ModelParams, positional_encoding

LOG_FLOOR = 1e-30


@dataclass
class TokenBatch:
    """Fixed-length token sequences with per-sequence condition labels."""

    tokens: np.ndarray                      # (B, L) ints in [0, alphabet)
    conditions: list[tuple[HamiltonianInstance, int]]
    cond_ids: np.ndarray                    # (B,) indices into `conditions`

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.int64)
        self.cond_ids = np.asarray(self.cond_ids, dtype=np.int64)
        if self.tokens.ndim != 2 or len(self.cond_ids) != len(self.tokens):
            raise ValueError("tokens must be (B, L) with one condition id per row")

    def __len__(self) -> int:
        return len(self.tokens)

    def take(self, idx) -> "TokenBatch":
        return TokenBatch(self.tokens[idx], self.conditions, self.cond_ids[idx])


def _core_fw(inputs: np.ndarray, ctx: np.ndarray, p: ModelParams):
    """inputs (B, T) already include the BOS column; ctx is (B, d)."""
    d = p.hyper["d_model"]
    b, t = inputs.shape
    pe = positional_encoding(t, d)
    x = p.tensors["token_emb"][inputs] + pe[None, :, :] + ctx[:, None, :]
    caches = []
    for i in range(p.hyper["n_blocks"]):
        x, cache = block_fw(x, p, f"blk{i}")
        caches.append(cache)
    xf, lnf_cache = layernorm_fw(x, p.tensors["lnf_g"], p.tensors["lnf_b"])
    logits = xf @ p.tensors["head_w"] + p.tensors["head_b"]
    return logits, (inputs, ctx, caches, xf, lnf_cache)


def _core_bw(dlogits: np.ndarray, cache, p: ModelParams,
             grads: dict[str, np.ndarray]) -> np.ndarray:
    """Returns d(context) of shape (B, d); fills tensor grads in place."""
    inputs, ctx, caches, xf, lnf_cache = cache
    d = p.hyper["d_model"]
    grads["head_w"] += xf.reshape(-1, d).T @ dlogits.reshape(-1, dlogits.shape[-1])
    grads["head_b"] += dlogits.sum(axis=(0, 1))
    dxf = dlogits @ p.tensors["head_w"].T
    dx, dg, db = layernorm_bw(dxf, lnf_cache)
    grads["lnf_g"] += dg
    grads["lnf_b"] += db
    for i in range(p.hyper["n_blocks"] - 1, -1, -1):
        dx = block_bw(dx, caches[i], p, grads, f"blk{i}")
    np.add.at(grads["token_emb"], inputs, dx)
    return dx.sum(axis=1)


def _with_bos(tokens: np.ndarray, scheme) -> np.ndarray:
    b = tokens.shape[0]
    bos = np.full((b, 1), scheme.bos_token, dtype=np.int64)
    return np.concatenate([bos, tokens], axis=1)


def forward(tokens: np.ndarray, c: np.ndarray, p: ModelParams) -> np.ndarray:
    """Probability rows for a prefix: output row i conditions on tokens <= i.

    `tokens` is (B, l) with l < sequence_length allowed (the prefix);
    returns (B, l+1, alphabet) rows summing to one.
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim == 1:
        tokens = tokens[None, :]
    if tokens.shape[1] >= p.scheme.sequence_length + 1:
        raise ValueError("prefix longer than the sequence length")
    if tokens.size:
        p.scheme.validate_tokens(tokens)
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    if c.shape[0] == 1 and tokens.shape[0] > 1:
        c = np.broadcast_to(c, (tokens.shape[0], c.shape[1]))
    logits, _ = _core_fw(_with_bos(tokens, p.scheme), c, p)
    return softmax_rows(logits)


def _contexts_for(batch: TokenBatch, p: ModelParams, want_cache: bool):
    ctx_rows = np.empty((len(batch.conditions), p.hyper["d_model"]))
    caches = []
    used = np.unique(batch.cond_ids)
    for u in used:
        inst, t_index = batch.conditions[u]
        cvec, ccache = embed_condition_fw(inst, t_index, p)
        ctx_rows[u] = cvec
        caches.append((u, ccache))
    return ctx_rows[batch.cond_ids], (used, caches) if want_cache else None


def nll(batch: TokenBatch, p: ModelParams) -> float:
    """Mean over sequences of -sum_i log p(a_i | prefix, condition)."""
    loss, _, _ = _nll_core(batch, p, need_grads=False)
    return loss


def gradients(batch: TokenBatch, p: ModelParams) -> tuple[float, dict[str, np.ndarray]]:
    """(nll, exact gradient for every tensor in the model)."""
    loss, grads, _ = _nll_core(batch, p, need_grads=True)
    return loss, grads


def _nll_core(batch: TokenBatch, p: ModelParams, need_grads: bool):
    if len(batch) == 0:
        raise ValueError("empty batch")
    tokens = batch.tokens
    if tokens.shape[1] != p.scheme.sequence_length:
        raise ValueError("batch sequences must match the scheme length")
    p.scheme.validate_tokens(tokens)
    inputs = _with_bos(tokens[:, :-1], p.scheme)
    ctx, ctx_cache = _contexts_for(batch, p, want_cache=True)
    logits, core_cache = _core_fw(inputs, ctx, p)
    probs = softmax_rows(logits)
    b, t = tokens.shape
    picked = probs[np.arange(b)[:, None], np.arange(t)[None, :], tokens]
    n_clamped = int((picked < LOG_FLOOR).sum())
    if n_clamped:
        warnings.warn(f"clamped {n_clamped} zero-probability tokens at the "
                      f"{LOG_FLOOR} log floor", RuntimeWarning, stacklevel=3)
    clipped = np.maximum(picked, LOG_FLOOR)
    loss = float(-np.log(clipped).sum() / b)
    if not np.isfinite(loss):
        raise FloatingPointError("non-finite likelihood")
    if not need_grads:
        return loss, None, probs

    grads = p.zeros_like()
    dlogits = probs.copy()
    dlogits[np.arange(b)[:, None], np.arange(t)[None, :], tokens] -= 1.0
    dlogits /= b
    dctx = _core_bw(dlogits, core_cache, p, grads)
    used, cond_caches = ctx_cache
    for u, ccache in cond_caches:
        rows = batch.cond_ids == u
        embed_condition_bw(dctx[rows].sum(axis=0), ccache, p, grads)
    return loss, grads, probs
