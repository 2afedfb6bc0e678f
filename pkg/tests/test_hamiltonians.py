import json

import numpy as np
import pytest

from genksr import hamiltonians as ham
from genksr import rng

from _oracles import dense_hamiltonian, dense_term, ground_pair


class TestHeisenberg1D:
    def test_two_qubit_terms_and_ground_energy(self):
        inst = ham.build_heisenberg_1d(2, [1.0])
        assert {(t.coefficient, t.axes) for t in inst.pauli_sum.terms} == {
            (1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")}
        e0, _ = ground_pair(inst.pauli_sum)
        assert e0 == pytest.approx(-3.0, abs=1e-10)

    def test_zero_coupling_gives_zero_operator(self):
        inst = ham.build_heisenberg_1d(2, [0.0])
        evals = np.linalg.eigvalsh(dense_hamiltonian(inst.pauli_sum))
        assert np.abs(evals).max() < 1e-14

    def test_seeded_draw_norm_bound(self):
        g = rng.stream(7, "instance", "heis1d", 0)
        weights = g.uniform(0.0, 2.0, 4)
        inst = ham.sample_instances("heis1d", 1, 7, n=5)[0]
        assert len(inst.pauli_sum.terms) == 12
        assert inst.pauli_sum.norm_bound() == pytest.approx(3 * weights.sum())
        assert np.allclose(inst.params, weights)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            ham.build_heisenberg_1d(1, [])
        with pytest.raises(ValueError):
            ham.build_heisenberg_1d(4, [1.0, 2.0])


class TestJ1J2:
    def test_bond_and_term_counts(self):
        inst = ham.build_j1j2_2d(4, 1.0, 0.0)
        edges = inst.pauli_sum.graph.edges
        assert sum(1 for e in edges if e[3] == "J1") == 32
        assert sum(1 for e in edges if e[3] == "J2") == 32
        assert len(inst.pauli_sum.terms) == 192
        assert all(t.coefficient in (0.25, 0.0) for t in inst.pauli_sum.terms)

    def test_side_two_deduplicates_wraparound(self):
        inst = ham.build_j1j2_2d(2, 1.0, 0.5)
        seen = set()
        for i, j, _, kind in inst.pauli_sum.graph.edges:
            key = (min(i, j), max(i, j), kind)
            assert key not in seen
            seen.add(key)

    def test_heisenberg_limit_matches_literature(self):
        # 4x4 torus at J2=0: exact diagonalization value -0.7017802 per site
        from genksr import simulator as sim
        inst = ham.build_j1j2_2d(4, 1.0, 0.0)
        e0, _ = sim.exact_ground_energy(inst.pauli_sum)
        assert e0 / 16 == pytest.approx(-0.7017802, abs=1e-6)

    def test_side_below_two_rejected(self):
        with pytest.raises(ValueError):
            ham.build_j1j2_2d(1, 1.0, 0.0)


class TestXXZ:
    def test_open_two_qubit_is_diagonal(self):
        inst = ham.build_xxz_chain(2, 0.0, periodic=False)
        evals = np.linalg.eigvalsh(dense_hamiltonian(inst.pauli_sum))
        assert sorted(np.round(evals, 12)) == [-1, -1, 1, 1]

    def test_periodic_counts_and_norm(self):
        inst = ham.build_xxz_chain(4, 1.0, periodic=True)
        assert len(inst.pauli_sum.terms) == 12
        assert inst.pauli_sum.norm_bound() == pytest.approx(12.0)

    def test_ground_energy_vs_dense(self):
        from genksr import simulator as sim
        inst = ham.build_xxz_chain(8, 0.5, periodic=True)
        e0, _ = sim.exact_ground_energy(inst.pauli_sum)
        ref, _ = ground_pair(inst.pauli_sum)
        assert e0 == pytest.approx(ref, abs=1e-10)


class TestSampling:
    def test_determinism(self):
        a = ham.sample_instances("heis1d", 50, 0, n=5)
        b = ham.sample_instances("heis1d", 50, 0, n=5)
        assert all(x.params == y.params for x, y in zip(a, b))

    def test_j2_range(self):
        insts = ham.sample_instances("j1j2_2d", 50, 1, side=4)
        j2 = [inst.params[1] for inst in insts]
        assert all(0.0 <= v <= 1.0 for v in j2)

    def test_xxz_mean_within_band(self):
        insts = ham.sample_instances("xxz_chain", 100, 2, n=20)
        mean = np.mean([inst.params[0] for inst in insts])
        # 3 sigma of a U[0,1] mean over 100 draws: 0.5 +- 3/sqrt(12*100)
        assert 0.4 <= mean <= 0.6

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            ham.sample_instances("ising", 1, 0, n=4)


class TestInvariants:
    @pytest.mark.parametrize("inst", [
        ham.build_heisenberg_1d(5, [0.3, 1.1, 0.7, 1.9]),
        ham.build_xxz_chain(5, 0.4, periodic=True),
        ham.build_j1j2_2d(2, 1.0, 0.7),
    ])
    def test_hermitian_and_sz_commuting(self, inst):
        H = dense_hamiltonian(inst.pauli_sum)
        assert np.abs(H - H.conj().T).max() < 1e-12
        n = inst.pauli_sum.n_qubits
        sz = sum(dense_term("I" * q + "Z" + "I" * (n - q - 1)) for q in range(n))
        assert np.abs(H @ sz - sz @ H).max() < 1e-10

    def test_norm_bound_dominates_spectrum(self):
        for inst in ham.sample_instances("heis1d", 5, 3, n=6):
            evals = np.linalg.eigvalsh(dense_hamiltonian(inst.pauli_sum))
            assert inst.pauli_sum.norm_bound() >= np.abs(evals).max() - 1e-12

    def test_permutation_consistency(self):
        inst = ham.build_heisenberg_1d(5, [0.3, 1.1, 0.7, 1.9])
        perm = [3, 0, 4, 1, 2]
        permuted = ham.permute_qubits(inst, perm)
        # same spectrum, and graph nodes moved with the axes
        a = np.linalg.eigvalsh(dense_hamiltonian(inst.pauli_sum))
        b = np.linalg.eigvalsh(dense_hamiltonian(permuted.pauli_sum))
        assert np.allclose(a, b, atol=1e-10)
        orig_edges = {(perm[i], perm[j], w, k)
                      for i, j, w, k in inst.pauli_sum.graph.edges}
        new_edges = set(permuted.pauli_sum.graph.edges)
        assert orig_edges == new_edges


class TestSerialization:
    @pytest.mark.parametrize("inst", [
        ham.sample_instances("heis1d", 1, 5, n=6)[0],
        ham.sample_instances("j1j2_2d", 1, 6, side=3)[0],
        ham.sample_instances("xxz_chain", 1, 7, n=5)[0],
    ])
    def test_round_trip(self, inst):
        text = ham.to_json(inst)
        doc = json.loads(text)
        assert list(doc) == ["family", "n_qubits", "seed", "params", "edges"]
        back = ham.from_json(text)
        assert back.family == inst.family
        assert back.params == inst.params
        assert back.pauli_sum == inst.pauli_sum

    def test_open_xxz_round_trip(self):
        inst = ham.build_xxz_chain(5, 0.3, periodic=False)
        back = ham.from_json(ham.to_json(inst))
        assert back.pauli_sum == inst.pauli_sum
