import numpy as np
import pytest

from usdkit import numkernel as nk
from usdkit.distill import (
    BipartiteState,
    density_spectrum,
    is_maximally_entangled,
    plan_distillation,
    schmidt,
    uniform_priors,
    usd_density_matrix,
)
from usdkit.errors import MissingPriors, NotNormalized, RankDeficient, ZeroState
from usdkit.usd import StateSet

ROOT = np.diag([np.sqrt(0.8), np.sqrt(0.2)])


def random_state(n, m, rng):
    c = nk.random_complex((n, m), rng)
    return BipartiteState(c / np.linalg.norm(c))


class TestBipartiteState:
    def test_vector_round_trip(self, rng):
        psi = nk.random_complex(6, rng)
        st = BipartiteState.from_vector(psi, 2, 3)
        assert st.shape == (2, 3)
        np.testing.assert_array_equal(st.to_vector(), psi)
        assert st.norm == pytest.approx(np.linalg.norm(psi))


class TestSchmidt:
    def test_diagonal(self):
        sd = schmidt(BipartiteState(ROOT))
        np.testing.assert_allclose(sd.coefficients_lambda, [np.sqrt(0.8), np.sqrt(0.2)], atol=1e-15)
        np.testing.assert_allclose(np.abs(sd.basis_a), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(np.abs(sd.basis_b), np.eye(2), atol=1e-15)

    def test_product(self):
        c = np.outer([0.6, 0.8], [1.0, 0.0, 0.0])
        assert schmidt(BipartiteState(c)).rank == 1

    def test_zero(self):
        with pytest.raises(ZeroState):
            schmidt(BipartiteState(np.zeros((2, 2))))

    def test_random_matches_svd(self, rng):
        for _ in range(60):
            n, m = rng.integers(1, 7, 2)
            c = nk.random_complex((n, m), rng)
            sd = schmidt(BipartiteState(c))
            # oracle: LAPACK singular values
            np.testing.assert_allclose(sd.coefficients_lambda[: min(n, m)],
                                       np.linalg.svd(c, compute_uv=False), atol=1e-10)
            r = min(n, m)
            rebuilt = sd.basis_a[:, :r] @ np.diag(sd.coefficients_lambda[:r]) @ sd.basis_b[:, :r].T
            np.testing.assert_allclose(rebuilt, c, atol=1e-10)
            assert np.sum(sd.coefficients_lambda**2) == pytest.approx(np.linalg.norm(c) ** 2, rel=1e-10)

    def test_local_unitary_invariance(self, rng):
        for _ in range(20):
            st = random_state(3, 3, rng)
            ua, ub = nk.haar_unitary(3, rng), nk.haar_unitary(3, rng)
            moved = BipartiteState(ua @ st.coefficients @ ub.T)
            np.testing.assert_allclose(schmidt(moved).coefficients_lambda,
                                       schmidt(st).coefficients_lambda, atol=1e-10)
            assert plan_distillation(moved).success_probability == pytest.approx(
                plan_distillation(st).success_probability, abs=1e-10)


class TestPlan:
    def test_golden(self):
        plan = plan_distillation(BipartiteState(ROOT))
        assert plan.success_probability == pytest.approx(0.4, abs=1e-15)
        assert plan.output_state.norm ** 2 == pytest.approx(0.4, abs=1e-15)
        assert is_maximally_entangled(plan.output_state)
        assert plan.filter.passive

    def test_maximally_entangled(self):
        plan = plan_distillation(BipartiteState(np.eye(2) / np.sqrt(2)))
        assert plan.success_probability == pytest.approx(1.0, abs=1e-15)
        np.testing.assert_allclose(plan.filter.matrix, np.eye(2), atol=1e-15)

    def test_product_rank_deficient(self):
        with pytest.raises(RankDeficient):
            plan_distillation(BipartiteState(np.diag([1.0, 0.0])))

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            plan_distillation(BipartiteState(np.eye(2)))

    def test_random_consistency(self, rng):
        for seed in range(100):
            n = 2 + seed % 3
            st = random_state(n, n, rng)
            plan = plan_distillation(st)
            g_inv = np.linalg.inv(st.coefficients)
            assert plan.success_probability == pytest.approx(n / np.linalg.norm(g_inv, 2) ** 2, abs=1e-10)
            assert plan.output_state.norm ** 2 == pytest.approx(plan.success_probability, abs=1e-10)
            assert schmidt(plan.output_state).spread < 1e-9
            assert 0 < plan.success_probability <= 1 + 1e-12
            assert plan.filter.passive

    def test_rectangular(self, rng):
        st = random_state(2, 4, rng)
        plan = plan_distillation(st)
        out = schmidt(plan.output_state)
        assert out.rank == 2 and out.spread < 1e-9
        # Procrustean value N * lambda_min^2
        lam = schmidt(st).coefficients_lambda
        assert plan.success_probability == pytest.approx(2 * lam[1] ** 2, abs=1e-10)

    def test_monotonic(self, rng):
        for _ in range(30):
            st = random_state(3, 3, rng)
            p = plan_distillation(st).success_probability
            assert p < 1.0
            assert not is_maximally_entangled(st)

    def test_output_coefficient(self):
        plan = plan_distillation(BipartiteState(ROOT))
        lam = schmidt(plan.output_state).coefficients_lambda
        np.testing.assert_allclose(lam, plan.output_norm / np.sqrt(2), atol=1e-15)


class TestDensity:
    def test_orthogonal(self):
        rho = usd_density_matrix(StateSet(np.eye(2), [0.5, 0.5]))
        np.testing.assert_allclose(rho, np.eye(2) / 2)

    def test_single(self):
        ev = density_spectrum(StateSet(np.array([[1.0], [0.0], [0.0]]), [1.0]))
        np.testing.assert_allclose(ev, [1, 0, 0], atol=1e-15)

    def test_overlap(self):
        c = 0.6
        g = np.array([[1.0, c], [0.0, np.sqrt(1 - c * c)]])
        ev = density_spectrum(StateSet(g, [0.5, 0.5]))
        np.testing.assert_allclose(ev, [0.8, 0.2], atol=1e-14)

    def test_random_trace(self, rng):
        st = uniform_priors(nk.random_complex((4, 3), rng))
        rho = usd_density_matrix(st)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_errors(self):
        with pytest.raises(MissingPriors):
            usd_density_matrix(StateSet(np.eye(2)))
        with pytest.raises(NotNormalized):
            usd_density_matrix(StateSet(2 * np.eye(2), [0.5, 0.5]))
