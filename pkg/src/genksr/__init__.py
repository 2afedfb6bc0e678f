"""genksr: Krylov quantum diagonalization simulators (KQD and sample-based
KQD) on small spin Hamiltonians, classical-shadow estimators, and a
conditional generative model that reproduces measurement records for unseen
Hamiltonians and extrapolated Krylov dimensions."""

__version__ = "0.1.0"
