import math

import numpy as np
import pytest

from genksr import rng, shadows
from genksr import hamiltonians as ham
from genksr import simulator as sim
from genksr.hamiltonians import PauliTerm
from genksr.shadows import ShotRecord


class TestEstimatePauli:
    def test_matching_basis_snapshot_value(self):
        est = shadows.estimate_pauli([ShotRecord("Z", "0")], PauliTerm(1.0, "Z"))
        assert est.value == pytest.approx(3.0)

    def test_mismatched_basis_gives_zero(self):
        est = shadows.estimate_pauli([ShotRecord("X", "1")], PauliTerm(1.0, "Z"))
        assert est.value == pytest.approx(0.0)

    def test_identity_returns_coefficient_exactly(self):
        est = shadows.estimate_pauli([ShotRecord("X", "1")], PauliTerm(2.5, "I"))
        assert est.value == 2.5 and est.std_error == 0.0

    def test_zero_state_z_estimate_and_stderr(self):
        zero = sim.basis_state(1, "0")
        records = sim.sample_pauli6(zero, 50_000, rng.stream(0, "sh"))
        est = shadows.estimate_pauli(records, PauliTerm(1.0, "Z"))
        assert abs(est.value - 1.0) <= 5 * est.std_error
        # snapshot values are {3, 0, 0}: variance 3^2/3 - 1 = 2
        assert est.std_error == pytest.approx(math.sqrt(2.0 / 50_000), rel=0.1)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            shadows.estimate_pauli([], PauliTerm(1.0, "Z"))

    def test_locality_ignores_other_columns(self):
        g = rng.stream(1, "loc")
        records = []
        for _ in range(500):
            bases = "".join("XYZ"[i] for i in g.integers(0, 3, 4))
            bits_ = "".join(str(b) for b in g.integers(0, 2, 4))
            records.append(ShotRecord(bases, bits_))
        P = PauliTerm(1.0, "IZZI")
        baseline = shadows.estimate_pauli(records, P).value
        # perturb columns 0 and 3 arbitrarily
        perturbed = [ShotRecord("Y" + r.bases[1:3] + "X",
                                str(1 - int(r.bits[0])) + r.bits[1:3] + "0")
                     for r in records]
        assert shadows.estimate_pauli(perturbed, P).value == baseline

    def test_unbiased_over_repetitions(self):
        H = ham.build_heisenberg_1d(3, [1.0, 0.5]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        state = sim.trotter_evolve(sim.neel_state(3), H, 1, cfg)
        P = PauliTerm(1.0, "ZZI")
        exact = sim.expectation(state, P)
        means, errs = [], []
        for rep in range(20):
            records = sim.sample_pauli6(state, 2000, rng.stream(7, "rep", rep))
            est = shadows.estimate_pauli(records, P)
            means.append(est.value)
            errs.append(est.std_error)
        grand = np.mean(means)
        pooled = np.sqrt(np.mean(np.square(errs)) / len(errs))
        assert abs(grand - exact) <= 5 * pooled


class TestVarianceScaling:
    def test_slope_minus_one(self):
        zero = sim.basis_state(2, "00")
        P = PauliTerm(1.0, "ZZ")
        sizes = [100, 1000, 10000]
        variances = []
        for m in sizes:
            estimates = [
                shadows.estimate_pauli(
                    sim.sample_pauli6(zero, m, rng.stream(3, "var", m, rep)), P).value
                for rep in range(60)
            ]
            variances.append(np.var(estimates, ddof=1))
        slope = np.polyfit(np.log(sizes), np.log(variances), 1)[0]
        assert -1.1 <= slope <= -0.9


class TestMedianOfMeans:
    def test_single_batch_is_mean(self):
        vals = [1.0, 2.0, 4.0]
        assert shadows.median_of_means(vals, 1) == pytest.approx(np.mean(vals))

    def test_constant_values(self):
        assert shadows.median_of_means([3.3] * 10, 3) == pytest.approx(3.3)

    def test_outlier_robustness(self):
        g = rng.stream(4, "mom")
        vals = list(g.normal(0, 1, 900))
        vals[17] = 1e6
        plain = np.mean(vals)
        robust = shadows.median_of_means(vals, 9)
        assert abs(plain) > 100
        assert abs(robust) < 1.0

    def test_bad_batch_count(self):
        with pytest.raises(ValueError):
            shadows.median_of_means([1.0], 2)
        with pytest.raises(ValueError):
            shadows.median_of_means([], 1)


class TestKrylovElements:
    @pytest.fixture(scope="class")
    def setup(self):
        inst = ham.build_heisenberg_1d(4, [1.0, 0.8, 1.2])
        H = inst.pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        records = {}
        for k in range(5):
            hts = sim.hadamard_test_state(H, k, cfg)
            records[k] = sim.sample_hadamard_records(hts, 10_000,
                                                     rng.stream(11, "kr", k))
        return H, cfg, records

    def test_within_five_sigma_of_exact(self, setup):
        H, cfg, records = setup
        s_est, h_est = shadows.estimate_krylov_elements(records, H)
        s, h = sim.krylov_elements_exact(H, 5, cfg, evolution="trotter")
        for k in range(5):
            assert abs(s_est[k].value - s[k]) <= 5 * s_est[k].std_error + 1e-9
            assert abs(h_est[k].value - h[k]) <= 5 * h_est[k].std_error

    def test_k0_overlap_near_one(self, setup):
        H, _, records = setup
        s_est, _ = shadows.estimate_krylov_elements(records, H)
        assert abs(s_est[0].value - 1.0) <= max(5 * s_est[0].std_error, 1e-9)

    def test_missing_k_rejected(self, setup):
        H, _, records = setup
        partial = {0: records[0], 2: records[2]}
        with pytest.raises(ValueError):
            shadows.estimate_krylov_elements(partial, H)

    def test_wrong_width_rejected(self, setup):
        H, _, _ = setup
        bad = {0: [ShotRecord("XZ", "01")]}
        with pytest.raises(ValueError):
            shadows.estimate_krylov_elements(bad, H)


class TestExactExpectationMode:
    def test_reproduces_direct_elements(self):
        # infinite-shot limit: expectations computed analytically on the state
        H = ham.build_heisenberg_1d(4, [0.9, 1.1, 0.5]).pauli_sum
        cfg = sim.EvolutionConfig.for_hamiltonian(H)
        s, h = sim.krylov_elements_exact(H, 4, cfg, evolution="trotter")
        for k in range(4):
            hts = sim.hadamard_test_state(H, k, cfg)
            anc_x = PauliTerm(1.0, "I" * 4 + "X")
            anc_y = PauliTerm(1.0, "I" * 4 + "Y")
            s_direct = (sim.expectation(hts, anc_x) + 1j * sim.expectation(hts, anc_y))
            h_direct = sum(
                t.coefficient * (sim.expectation(hts, PauliTerm(1.0, t.axes + "X"))
                                 + 1j * sim.expectation(hts, PauliTerm(1.0, t.axes + "Y")))
                for t in H.terms)
            assert abs(s_direct - s[k]) < 1e-10
            assert abs(h_direct - h[k]) < 1e-10


class TestSampleComplexity:
    def test_eps_ratio_exact(self):
        for L in (1, 10, 1000):
            for k in (1, 2, 3):
                assert (shadows.sample_complexity(0.1, L, k)
                        == 100 * shadows.sample_complexity(1.0, L, k))

    def test_log_growth_in_l(self):
        base = shadows.sample_complexity(0.5, 100, 2)
        doubled = shadows.sample_complexity(0.5, 200, 2)
        per_batch = math.ceil(34.0 / 0.25 * 16)
        assert doubled >= base
        # doubling L adds 2*ln(2) inside the batch ceiling: at most two
        # quantized increments, far below linear growth
        assert doubled - base <= 2 * per_batch
        assert doubled < 2 * base

    def test_locality_scaling(self):
        assert (shadows.sample_complexity(1.0, 10, 3)
                == 4 * shadows.sample_complexity(1.0, 10, 2))

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            shadows.sample_complexity(0.0, 10, 2)
        with pytest.raises(ValueError):
            shadows.sample_complexity(0.5, 0, 2)
        with pytest.raises(ValueError):
            shadows.sample_complexity(0.5, 10, 2, delta=1.5)
