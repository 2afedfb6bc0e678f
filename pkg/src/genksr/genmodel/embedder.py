"""Condition embedding: graph convolution over the interaction graph plus a
linear map of the normalized Krylov step index.

Node inputs are [1, degree, incident-weight sum] concatenated with a per-kind
incident-edge histogram; propagation uses the symmetrically normalized,
edge-weighted adjacency with self-loops; tanh between layers, linear last;
mean pooling gives the graph-level vector. The time channel is the scalar
t_index / t_max_train times a learned vector, which extrapolates smoothly to
step indices beyond the training range.
"""
from __future__ import annotations

import numpy as np

from ..hamiltonians import KIND_TAGS, HamiltonianInstance
from .params import GCN_FEATURE_DIM, ModelParams


def graph_arrays(inst: HamiltonianInstance) -> tuple[np.ndarray, np.ndarray]:
    """(normalized adjacency with self-loops, node feature matrix)."""
    graph = inst.pauli_sum.graph
    n = graph.n_nodes
    if not graph.edges:
        raise ValueError("interaction graph has no edges")
    adj = np.zeros((n, n))
    feats = np.zeros((n, GCN_FEATURE_DIM))
    feats[:, 0] = 1.0
    kind_col = {k: 3 + i for i, k in enumerate(KIND_TAGS)}
    for i, j, w, kind in graph.edges:
        adj[i, j] += w
        adj[j, i] += w
        for node in (i, j):
            feats[node, 1] += 1.0
            feats[node, 2] += w
            feats[node, kind_col[kind]] += 1.0
    adj += np.eye(n)
    dinv = 1.0 / np.sqrt(adj.sum(axis=1))
    return adj * dinv[:, None] * dinv[None, :], feats


def embed_condition_fw(inst: HamiltonianInstance, t_index: int, p: ModelParams):
    """Context vector c = pooled GCN output + time_w * normalized step."""
    a_hat, feats = graph_arrays(inst)
    depth = p.hyper["gcn_depth"]
    h = feats
    cache_layers = []
    for i in range(depth):
        prop = a_hat @ h
        z = prop @ p.tensors[f"gcn{i}_w"] + p.tensors[f"gcn{i}_b"]
        last = i == depth - 1
        out = z if last else np.tanh(z)
        cache_layers.append((prop, out, last))
        h = out
    g_vec = h.mean(axis=0)
    t_norm = float(t_index) / float(p.hyper["t_max_train"])
    c = g_vec + p.tensors["time_w"] * t_norm
    return c, (a_hat, feats, cache_layers, t_norm)


def embed_condition_bw(dc: np.ndarray, cache, p: ModelParams,
                       grads: dict[str, np.ndarray]) -> None:
    """Accumulate gradients of the GCN stack and time map into `grads`."""
    a_hat, feats, cache_layers, t_norm = cache
    grads["time_w"] += dc * t_norm
    n = a_hat.shape[0]
    dh = np.tile(dc / n, (n, 1))
    depth = len(cache_layers)
    for i in range(depth - 1, -1, -1):
        prop, out, last = cache_layers[i]
        dz = dh if last else dh * (1.0 - out * out)
        grads[f"gcn{i}_w"] += prop.T @ dz
        grads[f"gcn{i}_b"] += dz.sum(axis=0)
        dprop = dz @ p.tensors[f"gcn{i}_w"].T
        dh = a_hat.T @ dprop


def embed_condition(inst: HamiltonianInstance, t_index: int,
                    p: ModelParams) -> np.ndarray:
    c, _ = embed_condition_fw(inst, t_index, p)
    return c
