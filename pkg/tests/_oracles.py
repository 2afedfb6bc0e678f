"""Independent dense oracles used by the tests.

Everything here is built from explicit Kronecker products and dense linear
algebra so it shares no code path with the package kernels it validates.
"""
import numpy as np
import scipy.linalg

I2 = np.eye(2, dtype=complex)
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_term(axes: str) -> np.ndarray:
    """Kron product with qubit 0 as the least significant index factor."""
    m = np.array([[1.0 + 0j]])
    for a in axes:
        m = np.kron(PAULI[a], m)
    return m


def dense_hamiltonian(pauli_sum) -> np.ndarray:
    dim = 1 << pauli_sum.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for t in pauli_sum.terms:
        out += t.coefficient * dense_term(t.axes)
    return out


def dense_evolve(pauli_sum, psi: np.ndarray, t: float) -> np.ndarray:
    U = scipy.linalg.expm(-1j * t * dense_hamiltonian(pauli_sum))
    return U @ psi


def ground_pair(pauli_sum):
    """(E0, orthonormal ground-space columns) by full diagonalization."""
    H = dense_hamiltonian(pauli_sum)
    evals, evecs = np.linalg.eigh(H)
    e0 = evals[0]
    tol = 1e-8 * max(1.0, np.abs(evals).max())
    return float(e0), evecs[:, evals <= e0 + tol]


def whitened_gevp_min(H: np.ndarray, S: np.ndarray) -> float:
    """Brute-force generalized eigenvalue minimum via Cholesky whitening."""
    L = np.linalg.cholesky(S)
    Linv = np.linalg.inv(L)
    M = Linv @ H @ Linv.conj().T
    return float(np.linalg.eigvalsh(M)[0])
