import numpy as np
import pytest

from usdkit import numkernel as nk
from usdkit.errors import (
    DimensionMismatch,
    LengthMismatch,
    LinearlyDependent,
    NonInvertible,
    NotDiscriminated,
    NotUnitary,
    PreconditionError,
    ZeroState,
)
from usdkit.usd import (
    LossyOperator,
    StateSet,
    analyze,
    angle_bounds,
    are_usd_equivalent,
    best_angle,
    discrimination_residual,
    min_pairwise_angle,
    optimal_pair,
    pair_angle,
    population_report,
    reduce_to_2d,
    synthesize_discriminator,
)

from conftest import random_orthogonal_pair

# 2*arctan(1/2), evaluated independently via the half-angle identity cos = (1 - r^2)/(1 + r^2)
GOLDEN_ANGLE = 0.9272952180016122
K_DIAG = np.diag([0.5, 1.0])


class TestLossyOperator:
    def test_flags(self):
        op = LossyOperator(K_DIAG)
        assert op.passive and op.invertible
        assert op.dim == 2
        np.testing.assert_allclose(op.inverse, np.diag([2.0, 1.0]))

    def test_amplifying(self):
        assert not LossyOperator(2 * np.eye(2)).passive

    def test_passive_boundary(self):
        assert LossyOperator((1 + 5e-13) * np.eye(2)).passive
        assert not LossyOperator((1 + 1e-11) * np.eye(2)).passive

    def test_singular(self):
        op = LossyOperator([[0, 1], [0, 0]])
        assert not op.invertible
        with pytest.raises(NonInvertible):
            op.inverse

    def test_not_square(self):
        with pytest.raises(DimensionMismatch):
            LossyOperator(np.ones((2, 3)))

    def test_matrix_read_only(self):
        op = LossyOperator(K_DIAG)
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 3


class TestStateSet:
    def test_more_states_than_dim(self):
        with pytest.raises(PreconditionError):
            StateSet(np.ones((2, 3)))

    def test_priors(self):
        StateSet(np.eye(2), [0.25, 0.75])
        with pytest.raises(PreconditionError):
            StateSet(np.eye(2), [0.5, 0.6])
        with pytest.raises(LengthMismatch):
            StateSet(np.eye(2), [1.0])

    def test_normalized_zero(self):
        with pytest.raises(ZeroState):
            StateSet(np.array([[1.0, 0.0], [0.0, 0.0]])).normalized()


class TestAnalyze:
    def test_identity(self):
        r = analyze(np.eye(3))
        assert r.best_angle_rad == pytest.approx(np.pi / 2)
        assert r.condition_product == pytest.approx(1.0)

    def test_diag(self):
        r = analyze(K_DIAG)
        assert r.best_angle_rad == pytest.approx(GOLDEN_ANGLE, abs=1e-15)
        assert r.best_angle_deg == pytest.approx(53.13010235415598, abs=1e-12)
        assert r.angle_lower_bound == pytest.approx(0.75)
        assert r.angle_upper_bound == pytest.approx(1.0)
        assert r.angle_lower_bound <= r.best_angle_rad <= r.angle_upper_bound

    def test_singular_flagged_not_raised(self):
        r = analyze([[0, 1], [0, 0]])
        assert r.non_discriminating and r.best_angle_rad == 0.0
        assert not r.invertible

    def test_bound_sandwich(self, rng):
        for _ in range(100):
            n = rng.integers(2, 7)
            r = analyze(nk.random_complex((n, n), rng))
            assert r.angle_lower_bound - 1e-12 <= r.best_angle_rad <= r.angle_upper_bound + 1e-12


class TestBestAngle:
    def test_examples(self):
        assert best_angle(K_DIAG) == pytest.approx(GOLDEN_ANGLE, abs=1e-15)
        assert best_angle(np.diag([2.0, 1.0])) == pytest.approx(GOLDEN_ANGLE, abs=1e-15)
        assert best_angle(np.eye(2)) == pytest.approx(np.pi / 2)

    def test_singular(self):
        with pytest.raises(NonInvertible):
            best_angle([[0, 1], [0, 0]])
        with pytest.raises(NonInvertible):
            angle_bounds([[0, 1], [0, 0]])

    def test_bounds(self):
        assert angle_bounds(K_DIAG) == (0.75, 1.0)

    def test_inverse_symmetry(self, rng):
        for _ in range(50):
            n = rng.integers(2, 7)
            k = nk.random_complex((n, n), rng)
            assert abs(best_angle(k) - best_angle(nk.inverse(k))) <= 1e-10

    def test_scale_invariant(self, rng):
        k = nk.random_complex((4, 4), rng)
        assert best_angle(k) == pytest.approx(best_angle(7.5 * k), abs=1e-13)


class TestOptimalPair:
    def test_golden(self):
        p = optimal_pair(K_DIAG)
        # sign convention of the singular vectors is gauge; compare up to global phase
        pair = {tuple(np.round(np.abs(p.g_plus), 12)), tuple(np.round(np.abs(p.g_minus), 12))}
        assert pair == {(1.0, 0.5)}
        np.testing.assert_allclose(np.abs(p.out_plus), [0.5, 0.5], atol=1e-15)
        assert abs(np.vdot(p.out_plus, p.out_minus)) < 1e-15
        assert np.cos(p.angle_rad) == pytest.approx(0.6, abs=1e-15)
        assert p.detection_probability == pytest.approx(0.4, abs=1e-15)
        assert not p.degenerate

    def test_unitary_degenerate(self, rng):
        p = optimal_pair(nk.haar_unitary(3, rng))
        assert p.degenerate
        assert p.angle_rad == pytest.approx(np.pi / 2)
        assert p.detection_probability == pytest.approx(1.0)

    def test_singular(self):
        with pytest.raises(NonInvertible):
            optimal_pair([[0, 1], [0, 0]])

    def test_random(self, rng):
        for _ in range(100):
            n = rng.integers(2, 7)
            k = nk.random_complex((n, n), rng)
            p = optimal_pair(k)
            s = nk.svd(k).singular_values
            r = s[-1] / s[0]
            hp, hm = p.out_plus / np.linalg.norm(p.out_plus), p.out_minus / np.linalg.norm(p.out_minus)
            assert abs(np.vdot(hp, hm)) <= 1e-10
            assert abs(p.angle_rad - 2 * np.arctan(r)) <= 1e-10
            assert abs(np.cos(p.angle_rad) - (1 - r**2) / (1 + r**2)) <= 1e-10
            assert abs(pair_angle(p.g_plus, p.g_minus) - p.angle_rad) <= 1e-10

    def test_pullback_never_beats_optimum(self, rng):
        for _ in range(20):
            n = rng.integers(2, 6)
            k = nk.random_complex((n, n), rng)
            kinv = nk.inverse(k)
            theta = best_angle(k)
            for _ in range(100):
                a, b = random_orthogonal_pair(n, rng)
                assert pair_angle(kinv @ a, kinv @ b) >= theta - 1e-9


class TestSynthesize:
    def test_orthonormal_gives_identity(self):
        k = synthesize_discriminator(np.eye(3))
        np.testing.assert_allclose(k.matrix, np.eye(3), atol=1e-14)

    def test_sixty_degrees(self):
        th = np.pi / 3
        g = np.array([[1.0, np.cos(th)], [0.0, np.sin(th)]])
        k = synthesize_discriminator(g)
        ginv = np.linalg.inv(g)
        np.testing.assert_allclose(k.matrix, ginv / np.linalg.norm(ginv, 2), atol=1e-14)
        out = k.matrix @ g
        np.testing.assert_allclose(out, out[0, 0] * np.eye(2), atol=1e-14)
        assert k.passive

    def test_duplicate_column(self):
        with pytest.raises(LinearlyDependent):
            synthesize_discriminator(np.array([[1.0, 1.0], [0.5, 0.5]]))

    def test_bad_output_basis(self):
        with pytest.raises(NotUnitary):
            synthesize_discriminator(np.eye(2), output_basis=np.diag([1.0, 2.0]))

    def test_round_trip(self, rng):
        for _ in range(50):
            n = rng.integers(2, 7)
            g = nk.random_complex((n, n), rng)
            w = rng.uniform(0.1, 1.0, n)
            u = nk.haar_unitary(n, rng)
            k = synthesize_discriminator(g, weights=w, output_basis=u)
            assert k.passive
            out = k.matrix @ g
            gm = out.conj().T @ out
            assert np.abs(gm - np.diag(np.diag(gm))).max() <= 1e-9
            # outputs are the requested basis vectors, weighted proportionally to w
            ratio = (out / u).mean(axis=0)
            np.testing.assert_allclose(out, u * ratio, atol=1e-9)
            np.testing.assert_allclose(ratio.real / ratio.real[0], w / w[0], rtol=1e-9)

    def test_default_weights_norm_one(self, rng):
        k = synthesize_discriminator(nk.random_complex((4, 4), rng))
        assert k.spectral_norm == pytest.approx(1.0, abs=1e-12)

    def test_fewer_states(self, rng):
        g = nk.random_complex((4, 2), rng)
        k = synthesize_discriminator(g)
        assert discrimination_residual(k, g) <= 1e-10
        assert k.passive


class TestEquivalence:
    def test_examples(self, rng):
        k = nk.random_complex((4, 4), rng)
        for _ in range(100):
            assert are_usd_equivalent(k, nk.haar_unitary(4, rng) @ k @ nk.haar_unitary(4, rng))
        assert are_usd_equivalent(K_DIAG, np.diag([1.0, 0.5]))
        assert not are_usd_equivalent(K_DIAG, np.diag([0.6, 1.0]), tol=1e-9)

    def test_dimension(self):
        with pytest.raises(DimensionMismatch):
            are_usd_equivalent(np.eye(2), np.eye(3))


class TestPopulation:
    def test_pair_boundary(self):
        p = optimal_pair(K_DIAG)
        r = population_report(K_DIAG, p.states)
        assert r.fully_populated
        assert r.min_pairwise_angle_rad == pytest.approx(r.best_angle_rad, abs=1e-12)

    def test_three_states_strict(self, rng):
        for _ in range(100):
            k = nk.random_complex((3, 3), rng)
            r = population_report(k, nk.inverse(k))
            assert r.completely_nonorthogonal
            assert r.fully_populated
            assert r.angle_gap > 1e-9

    def test_block_diagonal(self):
        k = np.diag([0.5, 0.8, 1.0])
        r = population_report(k, np.eye(3))
        assert not r.fully_populated
        assert (r.overlaps == 0).any()

    def test_not_discriminated(self):
        g = np.array([[1.0, 1.0], [0.0, 1.0]])
        with pytest.raises(NotDiscriminated):
            population_report(np.eye(2), g)


class TestAngles:
    def test_examples(self):
        assert min_pairwise_angle(np.eye(3)) == pytest.approx(np.pi / 2)
        th = np.pi / 3
        assert min_pairwise_angle(np.array([[1, np.cos(th)], [0, np.sin(th)]])) == pytest.approx(th, abs=1e-15)
        assert min_pairwise_angle(optimal_pair(K_DIAG).states) == pytest.approx(np.arccos(0.6), abs=1e-15)

    def test_phase_blind(self):
        a = np.array([1.0, 0.3j])
        assert pair_angle(a, 1j * a) == 0.0

    def test_nearly_parallel(self):
        eps = 1e-9
        assert pair_angle([1.0, 0.0], [1.0, eps]) == pytest.approx(eps, rel=1e-6)

    def test_zero(self):
        with pytest.raises(ZeroState):
            pair_angle([0, 0], [1, 0])


class TestReduction:
    def test_golden(self):
        p = optimal_pair(K_DIAG)
        red = reduce_to_2d(K_DIAG, p.g_plus, p.g_minus)
        assert red.x_out == pytest.approx(red.y_out, abs=1e-14)
        assert 2 * np.arctan(red.tan_half_angle) == pytest.approx(GOLDEN_ANGLE, abs=1e-14)

    def test_random_discriminated_pairs(self, rng):
        for _ in range(50):
            n = rng.integers(2, 6)
            k = nk.random_complex((n, n), rng)
            kinv = nk.inverse(k)
            a, b = random_orthogonal_pair(n, rng)
            g1, g2 = kinv @ a, kinv @ b
            red = reduce_to_2d(k, g1, g2)
            assert red.x_out == pytest.approx(red.y_out, rel=1e-9)
            assert 2 * np.arctan(red.tan_half_angle) == pytest.approx(red.angle_rad, abs=1e-10)
