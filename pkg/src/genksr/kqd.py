"""Projected-subspace ground-energy extraction.

Per-step overlap and Hamiltonian matrix elements (exact or shadow-estimated)
are assembled into Toeplitz-structured Hermitian matrices, the near-singular
overlap matrix is regularized by discarding its small eigendirections, and
the thresholded generalized eigenproblem gives the energy curve E(D).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .hamiltonians import PauliSum
from .shadows import ShadowEstimate, estimate_krylov_elements
from .simulator import EvolutionConfig, krylov_elements_exact


@dataclass(frozen=True)
class KrylovMatrices:
    dim: int
    H_tilde: np.ndarray
    S_tilde: np.ndarray


@dataclass(frozen=True)
class ThresholdConfig:
    eps_cut: float
    mode: str  # "exact" or "sampled"

    def __post_init__(self):
        if not 0 <= self.eps_cut < 1:
            raise ValueError("eps_cut must be in [0, 1)")
        if self.mode not in ("exact", "sampled"):
            raise ValueError("mode must be 'exact' or 'sampled'")

    @classmethod
    def exact(cls, eps_cut: float = 1e-12) -> "ThresholdConfig":
        return cls(eps_cut, "exact")

    @classmethod
    def sampled(cls, eps_cut: float = 0.1) -> "ThresholdConfig":
        return cls(eps_cut, "sampled")


def assemble(s: np.ndarray, h: np.ndarray) -> KrylovMatrices:
    """Toeplitz assembly: S[j,k] = s_{k-j} for k >= j, conjugate below.

    Hermiticity is enforced by construction, which in particular takes the
    real part of s_0 and h_0 on the diagonals.
    """
    s = np.asarray(s, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if s.shape != h.shape or s.ndim != 1:
        raise ValueError("s and h must be 1-d vectors of equal length")
    # normalization sanity; Im(s_0) never enters the Hermitian diagonal
    if abs(s[0].real - 1.0) > 0.2:
        raise ValueError(f"s_0 = {s[0]:.3f} is too far from 1")
    d = len(s)
    S = np.empty((d, d), dtype=np.complex128)
    H = np.empty((d, d), dtype=np.complex128)
    for j in range(d):
        S[j, j] = s[0].real
        H[j, j] = h[0].real
        for k in range(j + 1, d):
            S[j, k] = s[k - j]
            S[k, j] = np.conj(s[k - j])
            H[j, k] = h[k - j]
            H[k, j] = np.conj(h[k - j])
    return KrylovMatrices(d, H, S)


def threshold_solve(m: KrylovMatrices, cfg: ThresholdConfig) -> tuple[float, int]:
    """Minimum eigenvalue of the whitened problem after cutting small S modes.

    Eigenpairs of S below eps_cut times its largest eigenvalue are dropped;
    the survivors whiten H via W = V L^{-1/2} and the smallest eigenvalue of
    W^dag H W is returned together with the retained dimension. The largest
    eigendirection always survives.
    """
    S, H = m.S_tilde, m.H_tilde
    herm = max(np.abs(S - S.conj().T).max(), np.abs(H - H.conj().T).max())
    scale = max(1.0, np.abs(S).max(), np.abs(H).max())
    if herm > 1e-10 * scale:
        raise ValueError(f"input matrices not Hermitian (residue {herm:.3e})")
    evals, evecs = np.linalg.eigh(S)
    lam_max = evals[-1]
    if lam_max <= 0:
        raise ValueError("overlap matrix has no positive eigenvalue")
    keep = evals > cfg.eps_cut * lam_max
    keep[-1] = True
    W = evecs[:, keep] / np.sqrt(evals[keep])
    reduced = W.conj().T @ H @ W
    e0 = float(np.linalg.eigvalsh(reduced)[0])
    return e0, int(keep.sum())


def regularized_solve(m: KrylovMatrices, floor: float) -> float:
    """Minimum eigenvalue of the generalized problem with S floored by delta*I.

    Adding a fixed diagonal floor (instead of cutting eigenpairs) keeps every
    direction well-posed while bounding the amplification of roundoff. With a
    floor fixed across subspace sizes, zero-padding embeds each candidate
    vector of the D-dimensional problem into the (D+1)-dimensional one, so
    energy curves are monotone non-increasing and variational to solver
    precision.
    """
    delta = max(float(floor) * float(np.real(m.S_tilde[0, 0])), 1e-14)
    S = m.S_tilde + delta * np.eye(m.dim)
    return float(scipy.linalg.eigh(m.H_tilde, S, eigvals_only=True,
                                   subset_by_index=[0, 0])[0])


class ExactElementProvider:
    """Analytic per-step elements of the noise-free Krylov states.

    evolution="exact" (default) keeps the Toeplitz-assembled matrices a true
    Rayleigh-Ritz pair, so energy curves are variational; "trotter" matches
    the sampled device circuits instead.
    """

    def __init__(self, H: PauliSum, cfg: EvolutionConfig | None = None,
                 evolution: str = "exact"):
        self.H = H
        self.cfg = cfg or EvolutionConfig.for_hamiltonian(H)
        self.evolution = evolution
        self._s: np.ndarray | None = None
        self._h: np.ndarray | None = None

    def elements(self, d_max: int) -> tuple[np.ndarray, np.ndarray]:
        if self._s is None or len(self._s) < d_max:
            self._s, self._h = krylov_elements_exact(self.H, d_max, self.cfg,
                                                     self.evolution)
        return self._s[:d_max], self._h[:d_max]


class ShadowElementProvider:
    """Shadow-estimated elements from Pauli-6 records of the test states."""

    def __init__(self, H: PauliSum, records_by_k):
        self.H = H
        self.records_by_k = records_by_k
        self._cache: tuple[np.ndarray, np.ndarray] | None = None

    def estimates(self) -> tuple[list[ShadowEstimate], list[ShadowEstimate]]:
        return estimate_krylov_elements(self.records_by_k, self.H)

    def elements(self, d_max: int) -> tuple[np.ndarray, np.ndarray]:
        if self._cache is None:
            s_est, h_est = self.estimates()
            self._cache = (np.array([e.value for e in s_est]),
                           np.array([e.value for e in h_est]))
        s, h = self._cache
        if len(s) < d_max:
            raise ValueError(f"provider only covers k < {len(s)}")
        return s[:d_max], h[:d_max]


def kqd_energy_curve(provider, D_max: int, cfg: ThresholdConfig):
    """E(D) for D = 1..D_max from leading blocks of the Toeplitz elements.

    Sampled mode rescales all elements by 1/Re(s_0) first (removing the
    global normalization bias of finite-shot estimates; a positive rescaling
    of both matrices leaves the minimizer unchanged) and solves with
    eigenvalue thresholding against the shot-noise floor. Exact mode solves
    with the fixed diagonal floor of `regularized_solve`, which keeps the
    curve monotone and variational at solver precision.
    """
    s, h = provider.elements(D_max)
    s = np.array(s, dtype=np.complex128)
    h = np.array(h, dtype=np.complex128)
    if cfg.mode == "sampled":
        s0 = s[0].real
        if abs(s0) < 1e-6:
            raise ValueError("sampled s_0 is numerically zero")
        s = s / s0
        h = h / s0
    energies = np.empty(D_max)
    kept = np.empty(D_max, dtype=np.int64)
    for D in range(1, D_max + 1):
        matrices = assemble(s[:D], h[:D])
        if cfg.mode == "sampled":
            e0, kd = threshold_solve(matrices, cfg)
        else:
            e0, kd = regularized_solve(matrices, cfg.eps_cut), D
        energies[D - 1] = e0
        kept[D - 1] = kd
    return energies, kept
