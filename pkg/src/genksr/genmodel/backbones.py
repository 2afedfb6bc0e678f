"""Causal sequence mixers: multi-head self-attention and a selective
diagonal-state recurrence, both with hand-derived backward passes.

Both blocks are pre-norm residual units followed by a pointwise two-layer
mixer. The recurrence updates h_t = a_t * h_{t-1} + (delta_t u_t) B_t with
a_t = exp(-softplus(.) * lambda) and input-dependent (delta, B, C), so it is
strictly causal and linear in sequence length; attention is quadratic. An
operation counter tracks analytic flop counts so the cost scaling is
testable without wall-clock timing.
"""
from __future__ import annotations

import numpy as np

from .layers import layernorm_bw, layernorm_fw, sigmoid, silu_bw, silu_fw, softmax_rows, softplus_bw, softplus_fw

_OP_COUNT = 0


def reset_op_counter() -> None:
    global _OP_COUNT
    _OP_COUNT = 0


def op_counter() -> int:
    return _OP_COUNT


def _count(n: float) -> None:
    global _OP_COUNT
    _OP_COUNT += int(n)


def _mlp_fw(x, p, prefix):
    ln_out, ln_cache = layernorm_fw(x, p.tensors[f"{prefix}_ln2_g"],
                                    p.tensors[f"{prefix}_ln2_b"])
    pre = ln_out @ p.tensors[f"{prefix}_mlp_w1"] + p.tensors[f"{prefix}_mlp_b1"]
    act, act_cache = silu_fw(pre)
    out = act @ p.tensors[f"{prefix}_mlp_w2"] + p.tensors[f"{prefix}_mlp_b2"]
    b, t, d = x.shape
    hidden = pre.shape[-1]
    _count(4 * b * t * d * hidden)
    return x + out, (ln_out, ln_cache, act, act_cache)


def _mlp_bw(dy, cache, p, grads, prefix):
    ln_out, ln_cache, act, act_cache = cache
    grads[f"{prefix}_mlp_w2"] += act.reshape(-1, act.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    grads[f"{prefix}_mlp_b2"] += dy.sum(axis=(0, 1))
    dact = dy @ p.tensors[f"{prefix}_mlp_w2"].T
    dpre = silu_bw(dact, act_cache)
    grads[f"{prefix}_mlp_w1"] += ln_out.reshape(-1, ln_out.shape[-1]).T @ dpre.reshape(-1, dpre.shape[-1])
    grads[f"{prefix}_mlp_b1"] += dpre.sum(axis=(0, 1))
    dln = dpre @ p.tensors[f"{prefix}_mlp_w1"].T
    dx, dg, db = layernorm_bw(dln, ln_cache)
    grads[f"{prefix}_ln2_g"] += dg
    grads[f"{prefix}_ln2_b"] += db
    return dy + dx


# ---------------------------------------------------------------------------
# attention
# ---------------------------------------------------------------------------

def attention_block_fw(x: np.ndarray, p, prefix: str):
    b, t, d = x.shape
    n_heads = p.hyper["n_heads"]
    dh = d // n_heads
    ln_out, ln_cache = layernorm_fw(x, p.tensors[f"{prefix}_ln1_g"],
                                    p.tensors[f"{prefix}_ln1_b"])
    qkv = ln_out @ p.tensors[f"{prefix}_attn_wqkv"] + p.tensors[f"{prefix}_attn_bqkv"]
    q, k, v = np.split(qkv, 3, axis=-1)
    # (b, heads, t, dh)
    q = q.reshape(b, t, n_heads, dh).transpose(0, 2, 1, 3)
    k = k.reshape(b, t, n_heads, dh).transpose(0, 2, 1, 3)
    v = v.reshape(b, t, n_heads, dh).transpose(0, 2, 1, 3)
    scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(dh)
    mask = np.triu(np.ones((t, t), dtype=bool), k=1)
    scores = np.where(mask, -np.inf, scores)
    attn = softmax_rows(scores)
    ctx = attn @ v
    merged = ctx.transpose(0, 2, 1, 3).reshape(b, t, d)
    out = merged @ p.tensors[f"{prefix}_attn_wo"] + p.tensors[f"{prefix}_attn_bo"]
    _count(8 * b * t * d * d + 4 * b * n_heads * t * t * dh)
    y = x + out
    cache = (ln_out, ln_cache, q, k, v, attn, merged)
    y, mlp_cache = _mlp_fw(y, p, prefix)
    return y, (cache, mlp_cache)


def attention_block_bw(dy: np.ndarray, cache, p, grads, prefix: str):
    attn_cache, mlp_cache = cache
    dy = _mlp_bw(dy, mlp_cache, p, grads, prefix)
    ln_out, ln_cache, q, k, v, attn, merged = attn_cache
    b, t, d = dy.shape
    n_heads = p.hyper["n_heads"]
    dh = d // n_heads

    dout = dy
    grads[f"{prefix}_attn_wo"] += merged.reshape(-1, d).T @ dout.reshape(-1, d)
    grads[f"{prefix}_attn_bo"] += dout.sum(axis=(0, 1))
    dmerged = dout @ p.tensors[f"{prefix}_attn_wo"].T
    dctx = dmerged.reshape(b, t, n_heads, dh).transpose(0, 2, 1, 3)

    dattn = dctx @ v.transpose(0, 1, 3, 2)
    dv = attn.transpose(0, 1, 3, 2) @ dctx
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores /= np.sqrt(dh)
    dq = dscores @ k
    dk = dscores.transpose(0, 1, 3, 2) @ q

    dqkv = np.concatenate([
        g.transpose(0, 2, 1, 3).reshape(b, t, d) for g in (dq, dk, dv)
    ], axis=-1)
    grads[f"{prefix}_attn_wqkv"] += ln_out.reshape(-1, d).T @ dqkv.reshape(-1, 3 * d)
    grads[f"{prefix}_attn_bqkv"] += dqkv.sum(axis=(0, 1))
    dln = dqkv @ p.tensors[f"{prefix}_attn_wqkv"].T
    dx, dg, db = layernorm_bw(dln, ln_cache)
    grads[f"{prefix}_ln1_g"] += dg
    grads[f"{prefix}_ln1_b"] += db
    return dy + dx


# ---------------------------------------------------------------------------
# selective state recurrence
# ---------------------------------------------------------------------------

def ssm_block_fw(x: np.ndarray, p, prefix: str):
    b, t, d = x.shape
    s = p.hyper["state_size"]
    ln_out, ln_cache = layernorm_fw(x, p.tensors[f"{prefix}_ln1_g"],
                                    p.tensors[f"{prefix}_ln1_b"])
    u = ln_out
    delta_pre = u @ p.tensors[f"{prefix}_ssm_wdelta"] + p.tensors[f"{prefix}_ssm_bdelta"]
    delta, delta_sig = softplus_fw(delta_pre)
    b_in = u @ p.tensors[f"{prefix}_ssm_wb"]    # (b, t, s)
    c_out = u @ p.tensors[f"{prefix}_ssm_wc"]   # (b, t, s)
    lam = np.exp(p.tensors[f"{prefix}_ssm_loglam"])  # (s,)
    decay = np.exp(-delta[..., None] * lam)     # (b, t, d, s)
    inj = delta * u                             # (b, t, d)

    h = np.zeros((b, d, s))
    h_all = np.empty((b, t, d, s))
    y = np.empty((b, t, d))
    for step in range(t):
        h = decay[:, step] * h + inj[:, step, :, None] * b_in[:, step, None, :]
        h_all[:, step] = h
        y[:, step] = np.einsum("bds,bs->bd", h, c_out[:, step])
    gate_pre = u @ p.tensors[f"{prefix}_ssm_wgate"] + p.tensors[f"{prefix}_ssm_bgate"]
    gate, gate_cache = silu_fw(gate_pre)
    yg = y * gate
    out = yg @ p.tensors[f"{prefix}_ssm_wout"] + p.tensors[f"{prefix}_ssm_bout"]
    _count(8 * b * t * d * d + 2 * b * t * d * s + 6 * b * t * d * s)
    res = x + out
    cache = (ln_out, ln_cache, u, delta_pre, delta, delta_sig, b_in, c_out,
             lam, decay, inj, h_all, y, gate, gate_cache, yg)
    res, mlp_cache = _mlp_fw(res, p, prefix)
    return res, (cache, mlp_cache)


def ssm_block_bw(dy: np.ndarray, cache, p, grads, prefix: str):
    ssm_cache, mlp_cache = cache
    dy = _mlp_bw(dy, mlp_cache, p, grads, prefix)
    (ln_out, ln_cache, u, delta_pre, delta, delta_sig, b_in, c_out, lam,
     decay, inj, h_all, y, gate, gate_cache, yg) = ssm_cache
    b, t, d = dy.shape
    s = lam.shape[0]

    dout = dy
    grads[f"{prefix}_ssm_wout"] += yg.reshape(-1, d).T @ dout.reshape(-1, d)
    grads[f"{prefix}_ssm_bout"] += dout.sum(axis=(0, 1))
    dyg = dout @ p.tensors[f"{prefix}_ssm_wout"].T
    dgate = dyg * y
    dy_seq = dyg * gate
    dgate_pre = silu_bw(dgate, gate_cache)
    grads[f"{prefix}_ssm_wgate"] += u.reshape(-1, d).T @ dgate_pre.reshape(-1, d)
    grads[f"{prefix}_ssm_bgate"] += dgate_pre.sum(axis=(0, 1))
    du = dgate_pre @ p.tensors[f"{prefix}_ssm_wgate"].T

    dh = np.zeros((b, d, s))
    ddecay = np.empty((b, t, d, s))
    dinj = np.empty((b, t, d))
    db_in = np.empty((b, t, s))
    dc_out = np.empty((b, t, s))
    for step in range(t - 1, -1, -1):
        h_here = h_all[:, step]
        dh = dh + dy_seq[:, step, :, None] * c_out[:, step, None, :]
        dc_out[:, step] = np.einsum("bds,bd->bs", h_here, dy_seq[:, step])
        h_prev = h_all[:, step - 1] if step > 0 else np.zeros((b, d, s))
        ddecay[:, step] = dh * h_prev
        dinj[:, step] = np.einsum("bds,bs->bd", dh, b_in[:, step])
        db_in[:, step] = np.einsum("bds,bd->bs", dh, inj[:, step])
        dh = dh * decay[:, step]

    # decay = exp(-delta * lam): d/ddelta = -lam * decay, d/dlam = -delta * decay
    ddelta = -(ddecay * decay * lam).sum(axis=-1)
    dlam = -(ddecay * decay * delta[..., None]).sum(axis=(0, 1, 2))
    grads[f"{prefix}_ssm_loglam"] += dlam * lam
    ddelta += dinj * u
    du += dinj * delta
    ddelta_pre = softplus_bw(ddelta, delta_sig)
    grads[f"{prefix}_ssm_wdelta"] += u.reshape(-1, d).T @ ddelta_pre.reshape(-1, d)
    grads[f"{prefix}_ssm_bdelta"] += ddelta_pre.sum(axis=(0, 1))
    du += ddelta_pre @ p.tensors[f"{prefix}_ssm_wdelta"].T
    grads[f"{prefix}_ssm_wb"] += u.reshape(-1, d).T @ db_in.reshape(-1, s)
    du += db_in @ p.tensors[f"{prefix}_ssm_wb"].T
    grads[f"{prefix}_ssm_wc"] += u.reshape(-1, d).T @ dc_out.reshape(-1, s)
    du += dc_out @ p.tensors[f"{prefix}_ssm_wc"].T

    dx, dg, db = layernorm_bw(du, ln_cache)
    grads[f"{prefix}_ln1_g"] += dg
    grads[f"{prefix}_ln1_b"] += db
    return dy + dx


def block_fw(x, p, prefix):
    if p.hyper["backbone"] == "attention":
        return attention_block_fw(x, p, prefix)
    return ssm_block_fw(x, p, prefix)


def block_bw(dy, cache, p, grads, prefix):
    if p.hyper["backbone"] == "attention":
        return attention_block_bw(dy, cache, p, grads, prefix)
    return ssm_block_bw(dy, cache, p, grads, prefix)
