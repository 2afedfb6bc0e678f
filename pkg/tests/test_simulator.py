import numpy as np
import pytest

from genksr import bits, rng
from genksr import hamiltonians as ham
from genksr import simulator as sim
from genksr.hamiltonians import PauliTerm

from _oracles import dense_evolve, dense_hamiltonian, ground_pair


def heis6():
    return ham.build_heisenberg_1d(6, [1.0, 0.7, 1.3, 0.9, 1.1])


class TestNeel:
    def test_two_qubits(self):
        s = sim.neel_state(2)
        expected = np.zeros(4)
        expected[1] = 1.0  # |10>: qubit 0 set
        assert np.array_equal(s.amplitudes.real, expected)

    def test_single_qubit(self):
        assert np.argmax(np.abs(sim.neel_state(1).amplitudes)) == 1

    def test_magnetization_balance(self):
        s = sim.neel_state(4)
        total = sum(sim.expectation(s, PauliTerm(1.0, "I" * q + "Z" + "I" * (3 - q)))
                    for q in range(4))
        assert total == pytest.approx(0.0, abs=1e-12)

    def test_zero_qubits_rejected(self):
        with pytest.raises(ValueError):
            sim.neel_state(0)


class TestTrotter:
    def test_single_term_exact(self):
        ps = ham.PauliSum(3, (PauliTerm(0.7, "XIY"),),
                          ham.InteractionGraph(3, ((0, 2, 1.0, "heis"),)))
        cfg = sim.EvolutionConfig(dt=0.9, trotter_steps=1)
        psi0 = sim.neel_state(3)
        got = sim.trotter_evolve(psi0, ps, 1, cfg)
        want = dense_evolve(ps, psi0.amplitudes, 0.9)
        assert np.abs(got.amplitudes - want).max() < 1e-12

    def test_commuting_terms_exact(self):
        ps = ham.PauliSum(3, (PauliTerm(0.5, "ZZI"), PauliTerm(1.2, "IZZ")),
                          ham.InteractionGraph(3, ((0, 1, 1, "x"), (1, 2, 1, "x"))))
        for steps in (1, 3):
            cfg = sim.EvolutionConfig(dt=1.1, trotter_steps=steps)
            got = sim.trotter_evolve(sim.neel_state(3), ps, 2, cfg)
            want = dense_evolve(ps, sim.neel_state(3).amplitudes, 2.2)
            assert np.abs(got.amplitudes - want).max() < 1e-12

    def test_second_order_error_scaling(self):
        H = heis6().pauli_sum
        t = np.pi / H.norm_bound()
        psi0 = sim.neel_state(6)
        exact = dense_evolve(H, psi0.amplitudes, t)
        errs = []
        for steps in (2, 4, 8):
            cfg = sim.EvolutionConfig(dt=t, trotter_steps=steps, trotter_order=2)
            approx = sim.trotter_evolve(psi0, H, 1, cfg)
            errs.append(np.linalg.norm(approx.amplitudes - exact))
        slopes = np.diff(np.log(errs)) / np.log(2)
        assert all(-2.3 <= s <= -1.7 for s in slopes)

    def test_norm_preserved(self):
        H = heis6().pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        out = sim.trotter_evolve(sim.neel_state(6), H, 4, cfg)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    def test_sz_conserved(self):
        for inst in (heis6(), ham.build_xxz_chain(6, 0.8), ham.build_j1j2_2d(2, 1, 0.4)):
            H = inst.pauli_sum
            n = H.n_qubits
            cfg = sim.EvolutionConfig.for_hamiltonian(H)
            state = sim.trotter_evolve(sim.neel_state(n), H, 3, cfg)
            before = sum(sim.expectation(sim.neel_state(n), PauliTerm(1.0, "I"*q + "Z" + "I"*(n-q-1)))
                         for q in range(n))
            after = sum(sim.expectation(state, PauliTerm(1.0, "I"*q + "Z" + "I"*(n-q-1)))
                        for q in range(n))
            assert after == pytest.approx(before, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sim.trotter_evolve(sim.neel_state(3), heis6().pauli_sum, 1,
                               sim.EvolutionConfig(dt=0.1))


class TestExactEvolve:
    def test_identity_at_zero_time(self):
        H = heis6().pauli_sum
        psi0 = sim.neel_state(6)
        out = sim.exact_evolve(psi0, H, 0.0)
        assert np.abs(out.amplitudes - psi0.amplitudes).max() < 1e-12

    def test_single_qubit_rotation(self):
        # <X>(t) = cos(2t) for |+> under H = Z
        ps = ham.PauliSum(1, (PauliTerm(1.0, "Z"),), ham.InteractionGraph(1, ()))
        plus = sim.StateVector(1, np.array([1, 1]) / np.sqrt(2))
        for t in (0.3, 1.1):
            out = sim.exact_evolve(plus, ps, t)
            assert sim.expectation(out, PauliTerm(1.0, "X")) == pytest.approx(
                np.cos(2 * t), abs=1e-10)

    def test_matches_dense_oracle(self):
        H = heis6().pauli_sum
        psi0 = sim.neel_state(6)
        got = sim.exact_evolve(psi0, H, 0.37)
        want = dense_evolve(H, psi0.amplitudes, 0.37)
        assert np.abs(got.amplitudes - want).max() < 1e-10


class TestExpectationOverlap:
    def test_neel_zz(self):
        assert sim.expectation(sim.neel_state(2), PauliTerm(1.0, "ZZ")) == pytest.approx(-1.0)

    def test_zero_state_x(self):
        zero = sim.basis_state(1, "0")
        assert sim.expectation(zero, PauliTerm(1.0, "X")) == pytest.approx(0.0)

    def test_random_state_full_hamiltonian(self):
        g = rng.stream(3, "state")
        v = g.normal(size=64) + 1j * g.normal(size=64)
        v /= np.linalg.norm(v)
        state = sim.StateVector(6, v)
        H = heis6().pauli_sum
        want = np.vdot(v, dense_hamiltonian(H) @ v).real
        assert sim.expectation(state, H) == pytest.approx(want, abs=1e-10)

    def test_overlaps(self):
        s10 = sim.basis_state(2, "10")
        s01 = sim.basis_state(2, "01")
        assert sim.overlap(s10, s10) == pytest.approx(1.0)
        assert sim.overlap(s10, s01) == pytest.approx(0.0)

    def test_overlap_bounded_for_evolved_states(self):
        H = heis6().pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        psi0 = sim.neel_state(6)
        psi1 = sim.trotter_evolve(psi0, H, 1, cfg)
        assert abs(sim.overlap(psi0, psi1)) <= 1.0 + 1e-12


class TestSampling:
    def test_neel_deterministic(self):
        shots = sim.sample_computational(sim.neel_state(5), 50, rng.stream(0, "a"))
        assert set(shots) == {"10101"}

    def test_plus_state_frequency(self):
        plus = sim.StateVector(1, np.array([1, 1]) / np.sqrt(2))
        shots = sim.sample_computational(plus, 10_000, rng.stream(0, "b"))
        freq = sum(s == "1" for s in shots) / 10_000
        assert 0.485 <= freq <= 0.515

    def test_same_stream_identical(self):
        H = heis6().pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        state = sim.trotter_evolve(sim.neel_state(6), H, 2, cfg)
        a = sim.sample_computational(state, 100, rng.stream(1, "x", 2))
        b = sim.sample_computational(state, 100, rng.stream(1, "x", 2))
        assert a == b

    def test_distinct_streams_independent(self):
        # chi-square on 2-qubit joint outcomes from two streams
        from scipy.stats import chi2_contingency
        H = ham.build_heisenberg_1d(2, [1.0]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        state = sim.trotter_evolve(sim.neel_state(2), H, 1, cfg)
        a = sim.sample_computational(state, 4000, rng.stream(9, "s", 0))
        b = sim.sample_computational(state, 4000, rng.stream(9, "s", 1))
        table = np.zeros((4, 4)) + 0.5
        for x, y in zip(a, b):
            table[bits.bitstring_to_int(x), bits.bitstring_to_int(y)] += 1
        keep_r = table.sum(axis=1) > 3
        keep_c = table.sum(axis=0) > 3
        _, p, _, _ = chi2_contingency(table[np.ix_(keep_r, keep_c)])
        assert p > 1e-4


class TestPauli6:
    def test_zero_state_z_basis(self):
        zero = sim.basis_state(2, "00")
        records = sim.sample_pauli6(zero, 2000, rng.stream(2, "p6"))
        for r in records:
            for q in range(2):
                if r.bases[q] == "Z":
                    assert r.bits[q] == "0"

    def test_zero_state_x_basis_balanced(self):
        zero = sim.basis_state(1, "0")
        records = sim.sample_pauli6(zero, 10_000, rng.stream(2, "p6b"))
        xs = [r.bits[0] for r in records if r.bases[0] == "X"]
        freq = sum(b == "1" for b in xs) / len(xs)
        # binomial 3 sigma around 0.5 at ~3333 draws
        assert abs(freq - 0.5) <= 3 * 0.5 / np.sqrt(len(xs))

    def test_basis_marginal_uniform(self):
        zero = sim.basis_state(3, "000")
        records = sim.sample_pauli6(zero, 9000, rng.stream(2, "p6c"))
        for q in range(3):
            counts = {c: 0 for c in "XYZ"}
            for r in records:
                counts[r.bases[q]] += 1
            for c in "XYZ":
                assert abs(counts[c] - 3000) <= 3 * np.sqrt(9000 * (1 / 3) * (2 / 3))


class TestGroundEnergy:
    def test_two_qubit_heisenberg(self):
        inst = ham.build_heisenberg_1d(2, [1.0])
        e0, ov = sim.exact_ground_energy(inst.pauli_sum)
        assert e0 == pytest.approx(-3.0, abs=1e-10)
        assert ov == pytest.approx(0.5, abs=1e-10)

    def test_zero_hamiltonian(self):
        inst = ham.build_heisenberg_1d(2, [0.0])
        e0, _ = sim.exact_ground_energy(inst.pauli_sum)
        assert e0 == 0.0

    def test_degenerate_ground_space_projection(self):
        # periodic ZZ chain at J_xy = 0: Neel and anti-Neel both minimal
        inst = ham.build_xxz_chain(4, 0.0, periodic=True)
        e0, ov = sim.exact_ground_energy(inst.pauli_sum)
        assert e0 == pytest.approx(-4.0, abs=1e-12)
        assert ov == pytest.approx(1.0, abs=1e-10)

    def test_sector_lanczos_vs_dense(self):
        inst = ham.build_xxz_chain(12, 1.0, periodic=True)
        H = inst.pauli_sum
        e_dense, _ = ground_pair_via_sparse(H)
        e_lanczos, ov = sim.exact_ground_energy(H)
        assert e_lanczos == pytest.approx(e_dense, abs=1e-8)
        assert 0.0 <= ov <= 1.0

    def test_oracle_range_guard(self):
        inst = ham.build_xxz_chain(25, 0.5)
        with pytest.raises(ValueError):
            sim.exact_ground_energy(inst.pauli_sum)


def ground_pair_via_sparse(H):
    """Dense eigensolve on the full sparse realization (test-local oracle)."""
    import scipy.linalg
    dense = sim.to_sparse(H).toarray()
    evals = scipy.linalg.eigvalsh(dense)
    return float(evals[0]), None


class TestHadamardTestState:
    def test_k0_identity(self):
        H = ham.build_heisenberg_1d(4, [1, 1, 1]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        hts = sim.hadamard_test_state(H, 0, cfg)
        assert sim.expectation(hts, PauliTerm(1.0, "IIIIX")) == pytest.approx(1.0, abs=1e-12)
        assert sim.expectation(hts, PauliTerm(1.0, "IIIIY")) == pytest.approx(0.0, abs=1e-12)

    def test_k0_hamiltonian_diagonal(self):
        H = ham.build_heisenberg_1d(4, [0.9, 1.2, 0.4]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        hts = sim.hadamard_test_state(H, 0, cfg)
        val = sum(t.coefficient * sim.expectation(hts, PauliTerm(1.0, t.axes + "X"))
                  for t in H.terms)
        assert val == pytest.approx(sim.expectation(sim.neel_state(4), H), abs=1e-10)

    def test_matches_direct_overlap_for_all_k(self):
        H = ham.build_heisenberg_1d(4, [0.9, 1.2, 0.4]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        psi0 = sim.neel_state(4)
        psi = psi0.copy()
        for k in range(11):
            if k:
                psi = sim.trotter_evolve(psi, H, 1, cfg)
            hts = sim.hadamard_test_state(H, k, cfg)
            got = (sim.expectation(hts, PauliTerm(1.0, "IIIIX"))
                   + 1j * sim.expectation(hts, PauliTerm(1.0, "IIIIY")))
            want = sim.overlap(psi0, psi)
            assert abs(got - want) < 1e-10


class TestNormEstimate:
    def test_matches_dense_extreme(self):
        H = heis6().pauli_sum
        evals = np.linalg.eigvalsh(dense_hamiltonian(H))
        want = max(abs(evals[0]), abs(evals[-1]))
        assert sim.operator_norm_estimate(H) == pytest.approx(want, abs=1e-8)

    def test_never_exceeds_coefficient_sum(self):
        for inst in ham.sample_instances("heis1d", 3, 11, n=5):
            H = inst.pauli_sum
            assert sim.operator_norm_estimate(H) <= H.norm_bound() + 1e-9
