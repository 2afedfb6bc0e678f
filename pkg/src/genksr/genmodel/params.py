"""Model parameter container, initialization, and checkpoint serialization.

Checkpoints are a magic header "GKSR", a little-endian u32 format version, a
length-prefixed JSON header (architecture, token scheme, training metadata,
tensor manifest), then the raw float64 little-endian tensor payload in
manifest order. Round-trips are bit-exact.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .. import rng
from ..hamiltonians import KIND_TAGS
from .tokens import TokenScheme

MAGIC = b"GKSR"
FORMAT_VERSION = 1

BACKBONES = ("attention", "ssm")

# node features: [1, degree, incident-weight sum] + per-kind incident counts
GCN_FEATURE_DIM = 3 + len(KIND_TAGS)

DEFAULT_HYPER = {
    "backbone": "attention",
    "d_model": 64,
    "n_blocks": 4,
    "n_heads": 4,
    "state_size": 16,
    "gcn_depth": 2,
    "gcn_hidden": 64,
    "t_max_train": 1.0,
    "seed": 0,
}


@dataclass
class ModelParams:
    hyper: dict
    scheme: TokenScheme
    tensors: dict[str, np.ndarray] = field(repr=False)

    def copy(self) -> "ModelParams":
        return ModelParams(dict(self.hyper), self.scheme,
                           {k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}


def positional_encoding(length: int, d: int) -> np.ndarray:
    """Fixed sinusoidal table, sin on even and cos on odd channels."""
    pos = np.arange(length)[:, None]
    i = np.arange(d)[None, :]
    angles = pos / np.power(10000.0, (2 * (i // 2)) / d)
    pe = np.where(i % 2 == 0, np.sin(angles), np.cos(angles))
    return pe.astype(np.float64)


def _glorot(g: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    scale = np.sqrt(2.0 / (fan_in + fan_out))
    return g.normal(0.0, scale, size=(fan_in, fan_out))


def init_params(scheme: TokenScheme, hyper: dict | None = None) -> ModelParams:
    """Fresh parameters; tensor insertion order is the checkpoint order."""
    hy = dict(DEFAULT_HYPER)
    if hyper:
        unknown = set(hyper) - set(DEFAULT_HYPER)
        if unknown:
            raise ValueError(f"unknown hyper keys {sorted(unknown)}")
        hy.update(hyper)
    if hy["backbone"] not in BACKBONES:
        raise ValueError(f"backbone must be one of {BACKBONES}")
    d = hy["d_model"]
    if hy["backbone"] == "attention" and d % hy["n_heads"] != 0:
        raise ValueError("d_model must be divisible by n_heads")
    g = rng.stream(hy["seed"], "model-init")
    V = scheme.alphabet_size
    S = hy["state_size"]
    hidden = 2 * d
    t: dict[str, np.ndarray] = {}

    t["token_emb"] = g.normal(0.0, 0.02, size=(V + 1, d))
    f_in = GCN_FEATURE_DIM
    for i in range(hy["gcn_depth"]):
        f_out = d if i == hy["gcn_depth"] - 1 else hy["gcn_hidden"]
        t[f"gcn{i}_w"] = _glorot(g, f_in, f_out)
        t[f"gcn{i}_b"] = np.zeros(f_out)
        f_in = f_out
    t["time_w"] = g.normal(0.0, 0.02, size=d)

    for b in range(hy["n_blocks"]):
        p = f"blk{b}"
        t[f"{p}_ln1_g"] = np.ones(d)
        t[f"{p}_ln1_b"] = np.zeros(d)
        if hy["backbone"] == "attention":
            t[f"{p}_attn_wqkv"] = _glorot(g, d, 3 * d)
            t[f"{p}_attn_bqkv"] = np.zeros(3 * d)
            t[f"{p}_attn_wo"] = _glorot(g, d, d)
            t[f"{p}_attn_bo"] = np.zeros(d)
        else:
            t[f"{p}_ssm_wdelta"] = _glorot(g, d, d)
            t[f"{p}_ssm_bdelta"] = np.full(d, -0.5)
            t[f"{p}_ssm_wb"] = _glorot(g, d, S)
            t[f"{p}_ssm_wc"] = _glorot(g, d, S)
            t[f"{p}_ssm_loglam"] = np.log(np.linspace(0.5, 2.0, S))
            t[f"{p}_ssm_wgate"] = _glorot(g, d, d)
            t[f"{p}_ssm_bgate"] = np.zeros(d)
            t[f"{p}_ssm_wout"] = _glorot(g, d, d)
            t[f"{p}_ssm_bout"] = np.zeros(d)
        t[f"{p}_ln2_g"] = np.ones(d)
        t[f"{p}_ln2_b"] = np.zeros(d)
        t[f"{p}_mlp_w1"] = _glorot(g, d, hidden)
        t[f"{p}_mlp_b1"] = np.zeros(hidden)
        t[f"{p}_mlp_w2"] = _glorot(g, hidden, d)
        t[f"{p}_mlp_b2"] = np.zeros(d)

    t["lnf_g"] = np.ones(d)
    t["lnf_b"] = np.zeros(d)
    t["head_w"] = _glorot(g, d, V)
    t["head_b"] = np.zeros(V)
    return ModelParams(hy, scheme, t)


def save_checkpoint(params: ModelParams, path, meta: dict | None = None) -> None:
    header = {
        "version": FORMAT_VERSION,
        "hyper": params.hyper,
        "scheme": {"alphabet_size": params.scheme.alphabet_size,
                   "sequence_length": params.scheme.sequence_length},
        "meta": meta or {},
        "tensors": [{"name": k, "shape": list(v.shape)}
                    for k, v in params.tensors.items()],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for v in params.tensors.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError("not a model checkpoint (bad magic)")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        tensors: dict[str, np.ndarray] = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError("truncated checkpoint payload")
            tensors[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    scheme = TokenScheme(**header["scheme"])
    return ModelParams(header["hyper"], scheme, tensors), header["meta"]
