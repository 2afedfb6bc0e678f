"""Classical-shadow estimators over Pauli-6 measurement records.

Each record stores the per-qubit measurement basis and binary outcome of one
snapshot. The inverse-channel estimator for a Pauli string multiplies
3*(-1)^bit over the string's support when the measured bases match, and is
zero otherwise. On top of that sit the auxiliary-qubit matrix-element
reconstruction used by the Krylov solver and the sample-complexity bound for
a target accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonians import PauliSum, PauliTerm

_BASIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


@dataclass(frozen=True)
class ShotRecord:
    bases: str  # per-qubit basis characters over {X,Y,Z}
    bits: str   # per-qubit outcomes over {0,1}

    def __post_init__(self):
        if len(self.bases) != len(self.bits):
            raise ValueError("bases and bits must have equal length")

    @property
    def width(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class ShadowEstimate:
    value: float | complex
    std_error: float
    n_snapshots: int


def records_to_arrays(records: list[ShotRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(bases, bits) integer arrays of shape (M, width)."""
    if not records:
        raise ValueError("empty record list")
    width = records[0].width
    bases = np.empty((len(records), width), dtype=np.int8)
    outs = np.empty((len(records), width), dtype=np.int8)
    for i, r in enumerate(records):
        if r.width != width:
            raise ValueError("records have inconsistent widths")
        bases[i] = [_BASIS_INDEX[c] for c in r.bases]
        outs[i] = [1 if c == "1" else 0 for c in r.bits]
    return bases, outs


def _snapshot_values(bases: np.ndarray, outs: np.ndarray, axes: str) -> np.ndarray:
    support = [(q, _BASIS_INDEX[a]) for q, a in enumerate(axes) if a != "I"]
    if not support:
        return np.ones(bases.shape[0])
    if support[-1][0] >= bases.shape[1]:
        raise ValueError("record width smaller than observable support")
    qs = np.array([q for q, _ in support])
    want = np.array([b for _, b in support], dtype=np.int8)
    match = (bases[:, qs] == want).all(axis=1)
    signs = 1 - 2 * (outs[:, qs].sum(axis=1) & 1)
    return np.where(match, float(3 ** len(support)) * signs, 0.0)


def _mean_estimate(values: np.ndarray, coeff: float = 1.0) -> ShadowEstimate:
    m = len(values)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(m)) if m > 1 else 0.0
    return ShadowEstimate(coeff * mean, abs(coeff) * se, m)


def estimate_pauli(records: list[ShotRecord], P: PauliTerm) -> ShadowEstimate:
    """Inverse-channel mean estimate of <P> with its standard error.

    Identity strings return the coefficient exactly with zero error.
    """
    bases, outs = records_to_arrays(records)
    values = _snapshot_values(bases, outs, P.axes)
    if P.weight() == 0:
        return ShadowEstimate(P.coefficient, 0.0, len(records))
    return _mean_estimate(values, P.coefficient)


def median_of_means(snapshot_values, n_batches: int) -> float:
    """Median of per-batch means over a contiguous equal partition.

    The remainder spreads over the leading batches; one batch is the plain
    mean.
    """
    values = np.asarray(snapshot_values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty value list")
    if not 1 <= n_batches <= values.size:
        raise ValueError("n_batches must be in [1, len(values)]")
    batches = np.array_split(values, n_batches)
    return float(np.median([b.mean() for b in batches]))


def estimate_krylov_elements(
    records_by_k: dict[int, list[ShotRecord]],
    H: PauliSum,
) -> tuple[list[ShadowEstimate], list[ShadowEstimate]]:
    """Complex (s_k, h_k) estimates from overlap-test measurement records.

    Records cover n+1 qubits with the ancilla last. The ancilla basis is
    deliberate (X shots estimate real parts, Y shots imaginary parts, with a
    bare (-1)^bit factor), while system qubits carry uniformly randomized
    bases and use the inverse-channel rule, 3*(-1)^bit per matching qubit.
    s_k is the ancilla-only estimate; h_k accumulates the coefficient-
    weighted term estimators shot by shot, so term correlations enter its
    standard error. Real and imaginary errors add in quadrature.
    """
    n = H.n_qubits
    d = len(records_by_k)
    if sorted(records_by_k) != list(range(d)):
        raise ValueError("need records for contiguous k = 0..D-1")
    terms = [t for t in H.terms if t.coefficient != 0.0]
    s_out: list[ShadowEstimate] = []
    h_out: list[ShadowEstimate] = []
    for k in range(d):
        bases, outs = records_to_arrays(records_by_k[k])
        if bases.shape[1] != n + 1:
            raise ValueError(f"records at k={k} must cover {n + 1} qubits")
        m = bases.shape[0]
        anc_sign = (1 - 2 * outs[:, n]).astype(np.float64)
        parts = {}
        for code, tag in ((0, "X"), (1, "Y")):
            sel = bases[:, n] == code
            if not sel.any():
                raise ValueError(f"records at k={k} have no ancilla-{tag} shots")
            system = np.zeros(int(sel.sum()))
            for t in terms:
                system += t.coefficient * _snapshot_values(
                    bases[sel], outs[sel], t.axes)
            parts[tag] = (_mean_estimate(anc_sign[sel]),
                          _mean_estimate(system * anc_sign[sel]))
        s_out.append(ShadowEstimate(
            parts["X"][0].value + 1j * parts["Y"][0].value,
            math.hypot(parts["X"][0].std_error, parts["Y"][0].std_error), m))
        h_out.append(ShadowEstimate(
            parts["X"][1].value + 1j * parts["Y"][1].value,
            math.hypot(parts["X"][1].std_error, parts["Y"][1].std_error), m))
    return s_out, h_out


def sample_complexity(eps: float, L: int, k_max: int, delta: float = 0.01) -> int:
    """Snapshots needed for L k-local Pauli observables to accuracy eps.

    Median-of-means form: ceil(34/eps^2 * 4^k) snapshots per batch times
    ceil(2 ln(2L/delta)) batches, with ||O||_inf = 1 for Pauli strings.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if L < 1:
        raise ValueError("L must be >= 1")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    per_batch = math.ceil(34.0 / (eps * eps) * (4 ** k_max))
    batches = math.ceil(2.0 * math.log(2.0 * L / delta))
    return per_batch * batches
