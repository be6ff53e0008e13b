import math

import numpy as np
import pytest

from arisce.channel import gen_channel, large_scale, square_geometry
from arisce.estimator import build_model
from arisce.training import (
    NoiseProfile,
    TrainingPlan,
    conventional_dft_patterns,
    dft_submatrix,
    onoff_patterns,
    optimal_beta,
    predict_variance_elements,
    predict_variance_sum,
    proposed_patterns,
    quantize_phases,
)

PAPER_NOISE = NoiseProfile(1e-10, 1e-11)  # -70 / -80 dBm
RHO50 = large_scale(50.0)


class TestDftSubmatrix:
    def test_two_point(self):
        f = dft_submatrix(2, 1).values
        np.testing.assert_allclose(f[:, 0], [1.0, -1.0], atol=1e-12)

    def test_four_point(self):
        f = dft_submatrix(4, 2).values
        np.testing.assert_allclose(f[:, 0], [1, -1j, -1, 1j], atol=1e-12)
        np.testing.assert_allclose(f[:, 1], [1, -1, 1, -1], atol=1e-12)

    @pytest.mark.parametrize("n,m", [(3, 2), (17, 16), (24, 7), (9, 8)])
    def test_orthogonality(self, n, m):
        f = dft_submatrix(n, m).values
        np.testing.assert_allclose(f.conj().T @ f, n * np.eye(m), atol=1e-10 * n)
        np.testing.assert_allclose(np.abs(f), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.ones(n) @ f, 0.0, atol=1e-9 * n)

    def test_rejects_short_training(self):
        with pytest.raises(ValueError):
            dft_submatrix(16, 16)


class TestOptimalBeta:
    def test_unconstrained_multi_antenna(self):
        beta = optimal_beta(1e5, RHO50, 16, PAPER_NOISE)
        assert beta == pytest.approx(0.1406, abs=1e-4)
        assert beta == pytest.approx(math.sqrt(math.sqrt(1e-11 / 1e-10) / 16), rel=1e-12)

    def test_cap_active(self):
        beta = optimal_beta(1.0, RHO50, 16, PAPER_NOISE)
        assert beta == pytest.approx(math.sqrt(RHO50), rel=1e-12)

    def test_single_antenna(self):
        beta = optimal_beta(1e5, RHO50, 1, PAPER_NOISE)
        assert beta == pytest.approx(0.56234, abs=1e-5)

    def test_always_in_admissible_range(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a_max = float(rng.uniform(1.0, 1e4))
            k = int(rng.integers(1, 128))
            rho = float(rng.uniform(1e-9, 1e-3))
            beta = optimal_beta(a_max, rho, k, PAPER_NOISE)
            assert 0.0 < beta <= a_max * math.sqrt(rho) * (1 + 1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            optimal_beta(0.0, RHO50, 16, PAPER_NOISE)
        with pytest.raises(ValueError):
            optimal_beta(1.0, RHO50, 0, PAPER_NOISE)
        with pytest.raises(ValueError):
            optimal_beta(1.0, RHO50, 16, NoiseProfile(0.0, 1e-11))


class TestProposedPatterns:
    def test_scalar_toy(self):
        plan = proposed_patterns(np.array([1.0 + 0j]), 0.5, 2)
        np.testing.assert_allclose(plan.patterns, [[0.5], [-0.5]], atol=1e-12)
        phi = np.concatenate([np.ones((2, 1)), plan.patterns.conj()], axis=1)
        np.testing.assert_allclose(phi.conj().T @ phi, 2 * np.diag([1, 0.25]), atol=1e-12)

    def test_constant_amplitude_on_los(self):
        rng = np.random.default_rng(12)
        ch = gen_channel(square_geometry(16), square_geometry(16), RHO50, rng)
        beta = 0.01
        plan = proposed_patterns(ch.g[:, 0], beta, 17)
        np.testing.assert_allclose(np.abs(plan.patterns), beta / math.sqrt(RHO50), rtol=1e-9)

    def test_cap_touches_a_max_exactly(self):
        rng = np.random.default_rng(13)
        ch = gen_channel(square_geometry(16), square_geometry(16), RHO50, rng)
        a_max = 10.0
        beta = optimal_beta(a_max, RHO50, 16, PAPER_NOISE)  # cap branch active here
        plan = proposed_patterns(ch.g[:, 0], beta, 17, a_max=a_max)
        assert np.max(np.abs(plan.patterns)) == pytest.approx(a_max, rel=1e-9)

    def test_gram_identities_every_antenna(self):
        rng = np.random.default_rng(14)
        ch = gen_channel(square_geometry(16), square_geometry(16), RHO50, rng)
        beta = 0.14
        plan = proposed_patterns(ch.g[:, 0], beta, 17)
        target = 17 * np.diag([1.0] + [beta**2] * 16)
        for k in range(16):
            model = build_model(plan, ch.g[:, k], PAPER_NOISE)
            gram = model.phi.conj().T @ model.phi
            np.testing.assert_allclose(gram, target, atol=1e-9 * 17 * max(1, beta**2))
            norms = np.linalg.norm(model.psi_rows, axis=1) ** 2
            np.testing.assert_allclose(norms, 16 * beta**2, rtol=1e-9)

    def test_rejects_near_singular_backward(self):
        g1 = np.ones(4, complex)
        g1[2] = 1e-15
        with pytest.raises(ValueError):
            proposed_patterns(g1, 0.1, 5)

    def test_amplitude_violation_reported(self):
        rng = np.random.default_rng(15)
        ch = gen_channel(square_geometry(16), square_geometry(16), RHO50, rng)
        with pytest.raises(ValueError):
            proposed_patterns(ch.g[:, 0], 0.1, 17, a_max=10.0)  # needs beta <= a_max*sqrt(rho)


class TestBenchmarkPatterns:
    def test_conventional_unit_amplitudes(self):
        plan = conventional_dft_patterns(17, 16)
        np.testing.assert_allclose(np.abs(plan.patterns), 1.0, atol=1e-12)

    def test_conventional_two_point(self):
        plan = conventional_dft_patterns(2, 1)
        np.testing.assert_allclose(plan.patterns, [[1.0], [-1.0]], atol=1e-12)

    def test_conventional_stacked_orthogonality(self):
        plan = conventional_dft_patterns(17, 16)
        stacked = np.concatenate([np.ones((17, 1)), plan.patterns.conj()], axis=1)
        np.testing.assert_allclose(stacked.conj().T @ stacked, 17 * np.eye(17), atol=1e-9)

    def test_onoff_layout(self):
        plan = onoff_patterns(3, 2, amplitude=1.0)
        np.testing.assert_allclose(plan.patterns, [[0, 0], [1, 0], [0, 1]], atol=1e-15)
        assert np.all((np.abs(plan.patterns) > 0).sum(axis=1) <= 1)

    def test_onoff_cyclic_repeat(self):
        plan = onoff_patterns(7, 2, amplitude=2.0)
        np.testing.assert_allclose(plan.patterns[3], [0, 0], atol=1e-15)
        np.testing.assert_allclose(plan.patterns[4], [2, 0], atol=1e-15)
        np.testing.assert_allclose(plan.patterns[6], [0, 0], atol=1e-15)

    def test_onoff_noise_gram(self):
        rng = np.random.default_rng(16)
        ch = gen_channel(square_geometry(16), square_geometry(4), RHO50, rng)
        plan = onoff_patterns(17, 16, amplitude=1.0)
        model = build_model(plan, ch.g[:, 0], PAPER_NOISE)
        norms = np.linalg.norm(model.psi_rows, axis=1) ** 2
        expected = np.where(np.arange(17) == 0, 0.0, RHO50)
        np.testing.assert_allclose(norms, expected, rtol=1e-9, atol=1e-20)

    def test_onoff_rejects_bad_amplitude(self):
        with pytest.raises(ValueError):
            onoff_patterns(3, 2, amplitude=0.0)


class TestQuantizePhases:
    def test_one_bit_example(self):
        plan = TrainingPlan(
            patterns=np.array([[np.exp(1j * 0.4 * np.pi)], [1.0 + 0j]]),
            beta=1.0,
            scheme="proposed",
            pilots=np.ones(2, complex),
        )
        q = quantize_phases(plan, 1)
        assert q.patterns[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_two_bit_example(self):
        plan = TrainingPlan(
            patterns=np.array([[2 * np.exp(1j * 0.9 * np.pi)], [1.0 + 0j]]),
            beta=1.0,
            scheme="proposed",
            pilots=np.ones(2, complex),
            a_max=2.0,
        )
        q = quantize_phases(plan, 2)
        assert q.patterns[0, 0] == pytest.approx(2 * np.exp(1j * np.pi), abs=1e-12)

    def test_amplitudes_preserved_and_idempotent(self):
        rng = np.random.default_rng(17)
        ch = gen_channel(square_geometry(16), square_geometry(4), RHO50, rng)
        plan = proposed_patterns(ch.g[:, 0], 0.01, 17)
        for bits in (1, 2, 3):
            once = quantize_phases(plan, bits)
            np.testing.assert_allclose(np.abs(once.patterns), np.abs(plan.patterns), rtol=1e-12)
            twice = quantize_phases(once, bits)
            assert np.array_equal(once.patterns, twice.patterns)

    def test_levels_hit(self):
        rng = np.random.default_rng(18)
        ch = gen_channel(square_geometry(16), square_geometry(4), RHO50, rng)
        q = quantize_phases(proposed_patterns(ch.g[:, 0], 0.01, 17), 2)
        phases = np.angle(q.patterns) % (2 * np.pi)
        steps = phases / (np.pi / 2)
        np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)

    def test_rejects_zero_bits(self):
        plan = conventional_dft_patterns(3, 2)
        with pytest.raises(ValueError):
            quantize_phases(plan, 0)


class TestVariancePredictions:
    def test_single_antenna_reduction(self):
        # K = 1 collapses to (M*(s1*b^2 + s2/b^2) + M^2*s1 + s2)/(P*N)
        m, n, p = 16, 17, 0.1
        s1, s2 = PAPER_NOISE.sigma1_sq, PAPER_NOISE.sigma2_sq
        for beta in np.geomspace(1e-3, 1.0, 13):
            expected = (m * (s1 * beta**2 + s2 / beta**2) + m**2 * s1 + s2) / (p * n)
            assert predict_variance_sum(beta, m, 1, n, PAPER_NOISE, p) == pytest.approx(
                expected, rel=1e-12
            )

    def test_stationary_at_optimum(self):
        beta_star = math.sqrt(math.sqrt(1e-11 / 1e-10) / 16)
        h = 1e-6 * beta_star
        up = predict_variance_sum(beta_star + h, 16, 16, 17, PAPER_NOISE, 0.1)
        dn = predict_variance_sum(beta_star - h, 16, 16, 17, PAPER_NOISE, 0.1)
        eps = predict_variance_sum(beta_star, 16, 16, 17, PAPER_NOISE, 0.1)
        assert abs((up - dn) / (2 * h)) < 1e-6 * eps

    def test_frozen_regression_value(self):
        # direct evaluation at the reference operating point
        val = predict_variance_sum(0.14060, 16, 16, 17, PAPER_NOISE, 0.1)
        assert val == pytest.approx(1.6305463960500443e-09, rel=1e-12)

    def test_rejects_nonpositive_beta(self):
        with pytest.raises(ValueError):
            predict_variance_sum(0.0, 16, 16, 17, PAPER_NOISE, 0.1)
        with pytest.raises(ValueError):
            predict_variance_elements(-1.0, 16, 16, 17, PAPER_NOISE, 0.1)

    def test_elements_sum_identity(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            m = int(rng.integers(1, 40))
            k = int(rng.integers(1, 40))
            n = m + 1 + int(rng.integers(0, 8))
            beta = float(rng.uniform(1e-3, 2.0))
            p = float(rng.uniform(1e-3, 10.0))
            eps = predict_variance_sum(beta, m, k, n, PAPER_NOISE, p)
            eps_d, eps_b = predict_variance_elements(beta, m, k, n, PAPER_NOISE, p)
            assert k * eps_d + m * eps_b == pytest.approx(eps, rel=1e-12)

    def test_monotonicity(self):
        grid = np.geomspace(1e-3, 1.0, 31)
        eps_d = [predict_variance_elements(b, 16, 16, 17, PAPER_NOISE, 0.1)[0] for b in grid]
        eps_b = [predict_variance_elements(b, 16, 16, 17, PAPER_NOISE, 0.1)[1] for b in grid]
        assert np.all(np.diff(eps_d) > 0)
        assert np.all(np.diff(eps_b) < 0)

    def test_direct_variance_limit_without_surface_noise(self):
        quiet = NoiseProfile(0.0, 1e-11)
        for beta in (1e-3, 0.1, 1.0):
            eps_d, _ = predict_variance_elements(beta, 16, 16, 17, quiet, 0.1)
            assert eps_d == pytest.approx(1e-11 / (0.1 * 17), rel=1e-12)

    def test_grid_argmin_near_optimum(self):
        beta_opt = optimal_beta(1e6, RHO50, 16, PAPER_NOISE)
        grid_db = np.arange(-20, 21) + 20 * math.log10(beta_opt)
        grid = 10 ** (grid_db / 20)
        values = [predict_variance_sum(b, 16, 16, 17, PAPER_NOISE, 0.1) for b in grid]
        nearest = int(np.argmin(np.abs(grid - beta_opt)))
        assert int(np.argmin(values)) == nearest


class TestTrainingPlanValidation:
    def test_rejects_short_training(self):
        with pytest.raises(ValueError):
            TrainingPlan(
                patterns=np.ones((2, 2), complex),
                beta=1.0,
                scheme="proposed",
                pilots=np.ones(2, complex),
            )

    def test_rejects_non_unit_pilots(self):
        with pytest.raises(ValueError):
            TrainingPlan(
                patterns=np.ones((3, 2), complex),
                beta=1.0,
                scheme="proposed",
                pilots=np.array([1.0, 2.0, 1.0], complex),
            )

    def test_rejects_amplitude_above_budget(self):
        with pytest.raises(ValueError):
            TrainingPlan(
                patterns=3.0 * np.ones((3, 2), complex),
                beta=1.0,
                scheme="proposed",
                pilots=np.ones(3, complex),
                a_max=2.0,
            )
