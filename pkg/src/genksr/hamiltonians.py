"""Pauli-sum spin Hamiltonians, their interaction graphs, and random instances.

All in-scope models are real linear combinations of 2-local Pauli strings on
n qubits: 1D Heisenberg chains with per-edge couplings, the J1-J2 model on a
square torus, and XXZ chains. Each builder also records the interaction graph
(node pairs, coupling weight, interaction kind) consumed by the graph
embedder of the generative model.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import rng

AXES = "IXYZ"

# global vocabulary of edge kinds, fixed order for one-hot features
KIND_TAGS = ("heis", "J1", "J2", "xxz")


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli string: coefficient * P_0 x P_1 x ... x P_{n-1}.

    `axes` is a string over "IXYZ"; character i acts on qubit i.
    """

    coefficient: float
    axes: str

    def __post_init__(self):
        if any(a not in AXES for a in self.axes):
            raise ValueError(f"bad Pauli axes {self.axes!r}")
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    def support(self) -> tuple[int, ...]:
        """Qubit indices where the string acts non-trivially."""
        return tuple(i for i, a in enumerate(self.axes) if a != "I")

    def weight(self) -> int:
        """Locality: number of non-identity factors."""
        return sum(a != "I" for a in self.axes)


@dataclass(frozen=True)
class InteractionGraph:
    n_nodes: int
    edges: tuple[tuple[int, int, float, str], ...]

    def __post_init__(self):
        seen = set()
        for i, j, _, kind in self.edges:
            if i == j or not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise ValueError(f"bad edge ({i},{j}) for {self.n_nodes} nodes")
            key = (min(i, j), max(i, j), kind)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)


@dataclass(frozen=True)
class PauliSum:
    n_qubits: int
    terms: tuple[PauliTerm, ...]
    graph: InteractionGraph

    def __post_init__(self):
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError("term width does not match n_qubits")

    def norm_bound(self) -> float:
        """Sum of |coefficients|; an upper bound on the operator norm."""
        return float(sum(abs(t.coefficient) for t in self.terms))

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class HamiltonianInstance:
    family: str
    params: tuple[float, ...]
    seed: int | None
    pauli_sum: PauliSum = field(compare=False)

    @property
    def n_qubits(self) -> int:
        return self.pauli_sum.n_qubits


@lru_cache(maxsize=None)
def term_masks(axes: str) -> tuple[int, int, int]:
    """(flip mask, Z/Y parity mask, #Y) for P|a> = i^{#Y} (-1)^{par} |a ^ flip>."""
    flip = zy = y_count = 0
    for i, a in enumerate(axes):
        if a in "XY":
            flip |= 1 << i
        if a in "ZY":
            zy |= 1 << i
        if a == "Y":
            y_count += 1
    return flip, zy, y_count


def pauli_phases(axes: str, indices: np.ndarray) -> np.ndarray:
    """Phase of P|a> for each index a (the flipped target is a ^ flip mask)."""
    _, zy, y_count = term_masks(axes)
    sign = 1 - 2 * (np.bitwise_count(indices & np.int64(zy)) & np.int64(1))
    return (1j ** y_count) * sign


def _two_site_axes(n: int, i: int, j: int, a: str) -> str:
    axes = ["I"] * n
    axes[i] = a
    axes[j] = a
    return "".join(axes)


def build_heisenberg_1d(n: int, weights) -> HamiltonianInstance:
    """Open Heisenberg chain: sum_i x_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    weights = [float(w) for w in np.atleast_1d(weights)]
    if len(weights) != n - 1:
        raise ValueError(f"expected {n - 1} edge weights, got {len(weights)}")
    terms = []
    edges = []
    for i, w in enumerate(weights):
        for a in "XYZ":
            terms.append(PauliTerm(w, _two_site_axes(n, i, i + 1, a)))
        edges.append((i, i + 1, w, "heis"))
    ps = PauliSum(n, tuple(terms), InteractionGraph(n, tuple(edges)))
    return HamiltonianInstance("heis1d", tuple(weights), None, ps)


def _torus_bonds(side: int):
    """Deduplicated nearest and next-nearest bonds of a side x side torus.

    Sites are numbered along a snake (boustrophedon) path so that qubit-index
    parity equals sublattice parity; the |1010...> reference state is then
    the checkerboard antiferromagnet rather than a stripe pattern.
    """
    def site(r, c):
        r %= side
        c %= side
        return r * side + (c if r % 2 == 0 else side - 1 - c)

    nn, nnn = set(), set()
    for r in range(side):
        for c in range(side):
            for dr, dc in ((0, 1), (1, 0)):
                a, b = site(r, c), site(r + dr, c + dc)
                if a != b:
                    nn.add((min(a, b), max(a, b)))
            for dr, dc in ((1, 1), (1, -1)):
                a, b = site(r, c), site(r + dr, c + dc)
                if a != b:
                    nnn.add((min(a, b), max(a, b)))
    return sorted(nn), sorted(nnn)


def build_j1j2_2d(side: int, J1: float, J2: float) -> HamiltonianInstance:
    """J1-J2 model on a periodic square lattice with spin-1/2 operators S = sigma/2.

    Each bond contributes (J/4)(XX + YY + ZZ), so reported energies divide by
    the site count to give energy per site on the usual S.S scale.
    """
    if side < 2:
        raise ValueError("need side >= 2")
    n = side * side
    nn, nnn = _torus_bonds(side)
    terms = []
    edges = []
    for bonds, J, kind in ((nn, J1, "J1"), (nnn, J2, "J2")):
        for i, j in bonds:
            for a in "XYZ":
                terms.append(PauliTerm(J / 4.0, _two_site_axes(n, i, j, a)))
            edges.append((i, j, float(J), kind))
    ps = PauliSum(n, tuple(terms), InteractionGraph(n, tuple(edges)))
    return HamiltonianInstance("j1j2_2d", (float(J1), float(J2)), None, ps)


def build_xxz_chain(n: int, J_xy: float, periodic: bool = True) -> HamiltonianInstance:
    """XXZ chain: sum over bonds of J_xy (XX + YY) + ZZ."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    terms = []
    edges = []
    for i, j in bonds:
        terms.append(PauliTerm(float(J_xy), _two_site_axes(n, i, j, "X")))
        terms.append(PauliTerm(float(J_xy), _two_site_axes(n, i, j, "Y")))
        terms.append(PauliTerm(1.0, _two_site_axes(n, i, j, "Z")))
        edges.append((i, j, float(J_xy), "xxz"))
    ps = PauliSum(n, tuple(terms), InteractionGraph(n, tuple(edges)))
    return HamiltonianInstance("xxz_chain", (float(J_xy),), None, ps)


FAMILIES = ("heis1d", "j1j2_2d", "xxz_chain")


def sample_instances(
    family: str,
    count: int,
    seed: int,
    *,
    n: int | None = None,
    side: int | None = None,
    j1: float = 1.0,
    periodic: bool = True,
) -> list[HamiltonianInstance]:
    """Draw `count` instances of a family with its stated coupling distribution.

    heis1d: per-edge weights U[0,2]; j1j2_2d: J2 ~ U[0,1] at fixed J1;
    xxz_chain: J_xy ~ U[0,1]. Deterministic given (family, seed).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    out = []
    for idx in range(count):
        g = rng.stream(seed, "instance", family, idx)
        if family == "heis1d":
            if n is None:
                raise ValueError("heis1d needs n")
            inst = build_heisenberg_1d(n, g.uniform(0.0, 2.0, n - 1))
        elif family == "j1j2_2d":
            if side is None:
                raise ValueError("j1j2_2d needs side")
            inst = build_j1j2_2d(side, j1, g.uniform(0.0, 1.0))
        else:
            if n is None:
                raise ValueError("xxz_chain needs n")
            inst = build_xxz_chain(n, g.uniform(0.0, 1.0), periodic)
        out.append(HamiltonianInstance(inst.family, inst.params, seed, inst.pauli_sum))
    return out


def permute_qubits(inst: HamiltonianInstance, perm) -> HamiltonianInstance:
    """Relabel qubits: new qubit perm[i] takes the role of old qubit i.

    Pauli axes and graph nodes move together, so the permuted instance
    describes the same operator up to basis relabeling.
    """
    perm = list(perm)
    ps = inst.pauli_sum
    n = ps.n_qubits
    if sorted(perm) != list(range(n)):
        raise ValueError("perm must be a permutation of qubit indices")
    terms = []
    for t in ps.terms:
        axes = ["I"] * n
        for i, a in enumerate(t.axes):
            axes[perm[i]] = a
        terms.append(PauliTerm(t.coefficient, "".join(axes)))
    edges = tuple((perm[i], perm[j], w, k) for i, j, w, k in ps.graph.edges)
    new_ps = PauliSum(n, tuple(terms), InteractionGraph(n, edges))
    return HamiltonianInstance(inst.family, inst.params, inst.seed, new_ps)


def rebuild(family: str, n_qubits: int, params, periodic: bool = True) -> HamiltonianInstance:
    """Reconstruct an instance from its family, size and parameter vector."""
    params = [float(p) for p in params]
    if family == "heis1d":
        return build_heisenberg_1d(n_qubits, params)
    if family == "j1j2_2d":
        side = int(round(n_qubits ** 0.5))
        if side * side != n_qubits:
            raise ValueError("j1j2_2d needs a square qubit count")
        return build_j1j2_2d(side, params[0], params[1])
    if family == "xxz_chain":
        return build_xxz_chain(n_qubits, params[0], periodic=periodic)
    raise ValueError(f"unknown family {family!r}")


def to_json(inst: HamiltonianInstance) -> str:
    doc = {
        "family": inst.family,
        "n_qubits": inst.n_qubits,
        "seed": inst.seed,
        "params": list(inst.params),
        "edges": [[i, j, w, k] for i, j, w, k in inst.pauli_sum.graph.edges],
    }
    return json.dumps(doc)


def from_json(text: str) -> HamiltonianInstance:
    doc = json.loads(text)
    n = doc["n_qubits"]
    periodic = any({i, j} == {0, n - 1} for i, j, _, _ in doc["edges"])
    inst = rebuild(doc["family"], n, doc["params"], periodic=periodic)
    rebuilt_edges = [[i, j, w, k] for i, j, w, k in inst.pauli_sum.graph.edges]
    if rebuilt_edges != [list(e) for e in doc["edges"]]:
        raise ValueError("edge list does not match rebuilt instance")
    return HamiltonianInstance(inst.family, inst.params, doc["seed"], inst.pauli_sum)
