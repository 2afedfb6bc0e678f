"""Lanczos extremal eigensolver with full reorthogonalization.

Used for ground-state oracles (symmetry-sector restrictions of spin models)
and for diagonalizing sampled-subspace projections. Full reorthogonalization
keeps the basis numerically orthonormal so converged Ritz values are reliable
to ~1e-12 without ghost eigenvalues.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg


class LanczosError(RuntimeError):
    pass


def lanczos_lowest(
    matvec,
    dim: int,
    v0: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 1000,
    seed: int = 9172,
):
    """Smallest eigenvalue and Ritz vector of a symmetric/Hermitian operator.

    `matvec` maps a length-`dim` vector to H @ v. Convergence requires both
    the Ritz-value change and the residual norm to fall below tol (scaled by
    the running spectral estimate). On breakdown (invariant subspace
    exhausted) a fresh random direction orthogonal to the basis is injected,
    which keeps the Rayleigh-Ritz property intact.

    Returns (theta, x, n_iter). Raises LanczosError if max_iter is exhausted
    before convergence. Real input keeps the whole iteration real.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if v0 is None:
        v0 = rng_start(dim, seed)
    v = np.array(v0, dtype=np.promote_types(np.asarray(v0).dtype, np.float64)).ravel()
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("zero start vector")
    v = v / nrm

    if dim == 1:
        theta = matvec(np.ones(1, dtype=v.dtype))[0]
        return float(np.real(theta)), np.ones(1, dtype=v.dtype), 1

    max_iter = min(max_iter, dim)
    cap = min(max_iter, 128)
    basis = np.empty((cap, dim), dtype=v.dtype)
    alphas: list[float] = []
    betas: list[float] = []
    basis[0] = v
    prev_theta = np.inf
    scale = 1.0

    for m in range(max_iter):
        if m + 1 >= basis.shape[0] and m + 1 < max_iter:
            grown = np.empty((min(2 * basis.shape[0], max_iter), dim), dtype=v.dtype)
            grown[: basis.shape[0]] = basis
            basis = grown
        w = np.asarray(matvec(basis[m]))
        if w.dtype != basis.dtype:
            promoted = np.promote_types(w.dtype, basis.dtype)
            basis = basis.astype(promoted)
            v = v.astype(promoted)
            w = w.astype(promoted)
        alpha = float(np.real(np.vdot(basis[m], w)))
        alphas.append(alpha)
        # full reorthogonalization against the entire basis, twice for safety
        for _ in range(2):
            w -= basis[: m + 1].T @ (basis[: m + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        scale = max(scale, abs(alpha), beta)

        T = np.diag(alphas)
        if betas:
            off = np.array(betas)
            T += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = scipy.linalg.eigh(T)
        theta = float(evals[0])
        # residual bound: |beta_m| * |last component of the Ritz vector|
        resid = beta * abs(evecs[-1, 0])

        if abs(theta - prev_theta) < tol * max(1.0, scale) and resid < tol * max(1.0, scale):
            x = basis[: m + 1].T @ evecs[:, 0]
            x /= np.linalg.norm(x)
            return theta, x, m + 1
        prev_theta = theta

        if m + 1 == dim:
            # basis spans the whole space: Rayleigh-Ritz is exact
            x = basis[: m + 1].T @ evecs[:, 0]
            x /= np.linalg.norm(x)
            return theta, x, m + 1
        if m + 1 == max_iter:
            break

        if beta < 1e-13 * max(1.0, scale):
            # invariant subspace exhausted; inject a fresh orthogonal direction
            w = rng_start(dim, seed + m + 1).astype(v.dtype)
            for _ in range(2):
                w -= basis[: m + 1].T @ (basis[: m + 1].conj() @ w)
            nw = np.linalg.norm(w)
            if nw < 1e-12:
                x = basis[: m + 1].T @ evecs[:, 0]
                x /= np.linalg.norm(x)
                return theta, x, m + 1
            betas.append(0.0)
            basis[m + 1] = w / nw
        else:
            betas.append(beta)
            basis[m + 1] = w / beta

    raise LanczosError(f"no convergence after {max_iter} iterations (tol={tol})")


def rng_start(dim: int, seed: int) -> np.ndarray:
    g = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, dim])))
    return g.standard_normal(dim)
