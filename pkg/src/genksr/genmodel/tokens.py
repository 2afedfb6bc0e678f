"""Token codecs between measurement records and model sequences.

Computational mode uses a binary alphabet (token = bit). Pauli-6 mode packs
(basis, outcome) jointly: token = 2 * basis_index + bit with bases ordered
X, Y, Z, giving a six-symbol alphabet. The begin-of-sequence symbol is an
internal extra embedding row and is never emitted by the model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..shadows import ShotRecord

_BASIS_CHARS = "XYZ"
_BASIS_INDEX = {c: i for i, c in enumerate(_BASIS_CHARS)}


@dataclass(frozen=True)
class TokenScheme:
    alphabet_size: int   # 2 (computational) or 6 (pauli6)
    sequence_length: int

    def __post_init__(self):
        if self.alphabet_size not in (2, 6):
            raise ValueError("alphabet_size must be 2 or 6")
        if self.sequence_length < 1:
            raise ValueError("sequence_length must be >= 1")

    @property
    def mode(self) -> str:
        return "pauli6" if self.alphabet_size == 6 else "computational"

    @property
    def bos_token(self) -> int:
        return self.alphabet_size

    def encode_bits(self, bitstring: str) -> np.ndarray:
        if self.alphabet_size != 2 or len(bitstring) != self.sequence_length:
            raise ValueError("bitstring does not fit scheme")
        return np.fromiter((1 if c == "1" else 0 for c in bitstring),
                           dtype=np.int64, count=self.sequence_length)

    def decode_bits(self, tokens) -> str:
        return "".join("1" if t else "0" for t in tokens)

    def encode_record(self, record: ShotRecord) -> np.ndarray:
        if self.alphabet_size != 6 or record.width != self.sequence_length:
            raise ValueError("record does not fit scheme")
        return np.fromiter(
            (2 * _BASIS_INDEX[b] + (1 if o == "1" else 0)
             for b, o in zip(record.bases, record.bits)),
            dtype=np.int64, count=self.sequence_length)

    def decode_record(self, tokens) -> ShotRecord:
        bases = "".join(_BASIS_CHARS[int(t) // 2] for t in tokens)
        outs = "".join(str(int(t) % 2) for t in tokens)
        return ShotRecord(bases, outs)

    def validate_tokens(self, tokens: np.ndarray):
        if tokens.min(initial=0) < 0 or tokens.max(initial=0) >= self.alphabet_size:
            raise ValueError("token out of alphabet")
