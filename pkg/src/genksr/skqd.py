"""Sample-based Krylov diagonalization.

Bitstrings sampled from Krylov states are merged into a subspace basis, the
Pauli-sum Hamiltonian is projected onto that basis as a sparse real-symmetric
matrix, and the lowest eigenvalue is extracted by Lanczos (dense fallback for
small projections).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from . import bits, linalg
from .hamiltonians import PauliSum, PauliTerm, pauli_phases, term_masks


def apply_pauli_to_bitstring(P: PauliTerm, a: str) -> tuple[str, complex]:
    """P|a> = phase * |a'>; X flips, Z contributes (-1)^bit, Y flips with +-i."""
    if P.n_qubits != len(a):
        raise ValueError("width mismatch")
    v = bits.bitstring_to_int(a)
    flip, _, _ = term_masks(P.axes)
    phase = pauli_phases(P.axes, np.array([v], dtype=np.int64))[0]
    return bits.int_to_bitstring(v ^ flip, len(a)), complex(phase)


@dataclass(frozen=True)
class SubspaceBasis:
    n_qubits: int
    states: np.ndarray  # sorted int64 indices, no duplicates

    def __post_init__(self):
        object.__setattr__(self, "states", np.asarray(self.states, dtype=np.int64))
        if self.states.size and (np.diff(self.states) <= 0).any():
            raise ValueError("states must be strictly sorted")

    def __len__(self) -> int:
        return len(self.states)

    def index(self, bitstring: str) -> int:
        v = bits.bitstring_to_int(bitstring)
        pos = int(np.searchsorted(self.states, v))
        if pos >= len(self.states) or self.states[pos] != v:
            raise KeyError(bitstring)
        return pos

    def bitstrings(self) -> list[str]:
        return bits.ints_to_bitstrings(self.states, self.n_qubits)


def collect_basis(samples_by_k: dict[int, list[str]], D: int,
                  sz_filter: bool = False) -> SubspaceBasis:
    """Union of unique bitstrings over Krylov steps k < D.

    With sz_filter, strings outside the half-filling sector (Hamming weight
    != n/2 rounded up, the Neel sector) are dropped.
    """
    widths = {len(s) for k in samples_by_k if k < D for s in samples_by_k[k]}
    if len(widths) > 1:
        raise ValueError(f"inconsistent bitstring widths {sorted(widths)}")
    if not widths:
        raise ValueError("no samples for any k < D")
    n = widths.pop()
    values = set()
    for k, strings in samples_by_k.items():
        if k < D:
            values.update(bits.bitstring_to_int(s) for s in strings)
    states = np.array(sorted(values), dtype=np.int64)
    if sz_filter:
        states = states[np.bitwise_count(states) == (n + 1) // 2]
    return SubspaceBasis(n, states)


@dataclass(frozen=True)
class SparseProjection:
    dim: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray  # real, canonically sorted by (row, col)

    def to_csr(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.coo_matrix(
            (self.values, (self.rows, self.cols)), shape=(self.dim, self.dim)
        ).tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_csr().toarray()


def project_hamiltonian(H: PauliSum, B: SubspaceBasis) -> SparseProjection:
    """P_B H P_B as a sparse real-symmetric matrix over the basis ordering.

    Transitions leaving the subspace are dropped. All in-scope Hamiltonians
    pair Y factors (YY terms), so accumulated entries are real; a residual
    imaginary part above tolerance signals a non-real-symmetric input and is
    reported as an error.
    """
    if H.n_qubits != B.n_qubits:
        raise ValueError("width mismatch")
    states = B.states
    dim = len(states)
    if dim == 0:
        return SparseProjection(0, np.empty(0, np.int64), np.empty(0, np.int64),
                                np.empty(0, np.float64))
    cols_all, rows_all, vals_all = [], [], []
    col_idx = np.arange(dim, dtype=np.int64)
    for t in H.terms:
        if t.coefficient == 0.0:
            continue
        flip, _, _ = term_masks(t.axes)
        targets = states ^ flip
        pos = np.searchsorted(states, targets)
        pos = np.minimum(pos, dim - 1)
        hit = states[pos] == targets
        if not hit.any():
            continue
        phases = pauli_phases(t.axes, states[hit])
        vals_all.append(t.coefficient * phases)
        rows_all.append(pos[hit])
        cols_all.append(col_idx[hit])
    if not vals_all:
        return SparseProjection(dim, np.empty(0, np.int64), np.empty(0, np.int64),
                                np.empty(0, np.float64))
    rows = np.concatenate(rows_all)
    cols = np.concatenate(cols_all)
    vals = np.concatenate(vals_all)
    # merge duplicate coordinates, then canonical (row, col) order
    flat = rows * dim + cols
    order = np.argsort(flat, kind="stable")
    flat, rows, cols, vals = flat[order], rows[order], cols[order], vals[order]
    boundaries = np.nonzero(np.diff(flat))[0] + 1
    starts = np.concatenate(([0], boundaries))
    merged = np.add.reduceat(vals, starts)
    rows, cols = rows[starts], cols[starts]
    scale = max(1.0, float(np.abs(merged).max()))
    resid = float(np.abs(merged.imag).max()) if np.iscomplexobj(merged) else 0.0
    if resid > 1e-12 * scale:
        raise ValueError(f"projection has imaginary residue {resid:.3e}")
    return SparseProjection(dim, rows, cols, np.real(merged).astype(np.float64))


def lowest_eigenvalue(m: SparseProjection, tol: float = 1e-10,
                      max_iter: int = 1000) -> float:
    """Minimum eigenvalue: dense for dim <= 512, else Lanczos (full reorth)."""
    if m.dim < 1:
        raise ValueError("empty projection")
    if m.dim <= 512:
        return float(scipy.linalg.eigh(m.to_dense(), eigvals_only=True,
                                       subset_by_index=[0, 0])[0])
    mat = m.to_csr()
    theta, _, _ = linalg.lanczos_lowest(mat.dot, m.dim, tol=tol, max_iter=max_iter)
    return theta


def skqd_energy_curve(H: PauliSum, samples_by_k: dict[int, list[str]],
                      D_max: int, sz_filter: bool = False,
                      tol: float = 1e-10) -> tuple[np.ndarray, list[int]]:
    """E(D) for D = 1..D_max over cumulative (nested) sampled bases.

    Returns (energies, basis sizes). Nested subspaces make the curve
    monotone non-increasing up to numerical tolerance.
    """
    energies = np.empty(D_max)
    sizes = []
    for D in range(1, D_max + 1):
        basis = collect_basis(samples_by_k, D, sz_filter)
        proj = project_hamiltonian(H, basis)
        energies[D - 1] = lowest_eigenvalue(proj, tol=tol)
        sizes.append(len(basis))
    return energies, sizes
