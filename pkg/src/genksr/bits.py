"""Bitstring conventions shared by the simulator and subspace machinery.

Qubit i maps to bit i of the integer index (qubit 0 is the least significant
bit) and to character i of the external bitstring, so "10" means qubit 0 is 1
and qubit 1 is 0, i.e. integer index 1.
"""
from __future__ import annotations

import numpy as np


def int_to_bitstring(value: int, n: int) -> str:
    return "".join("1" if (value >> i) & 1 else "0" for i in range(n))


def bitstring_to_int(s: str) -> int:
    v = 0
    for i, c in enumerate(s):
        if c == "1":
            v |= 1 << i
        elif c != "0":
            raise ValueError(f"bad bitstring {s!r}")
    return v


def ints_to_bitstrings(values, n: int) -> list[str]:
    return [int_to_bitstring(int(v), n) for v in values]


def sector_indices(n: int, hamming_weight: int) -> np.ndarray:
    """Sorted integer indices of all n-bit states with the given weight."""
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[np.bitwise_count(idx) == hamming_weight]


def neel_index(n: int) -> int:
    """Index of |1010...>: ones on even qubit positions."""
    return sum(1 << i for i in range(0, n, 2))
