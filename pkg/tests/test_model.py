import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from inarcusum.exceptions import UnstableModel
from inarcusum.model import (
    ChangeSpec,
    InarModel,
    InnovationSpec,
    ObservationSeries,
    burn_in_length,
    companion_matrix,
    moment_matrix_C,
    simulate,
    simulate_with_change,
    stationary_moments,
)


def _iterate_moments(model, steps=4000):
    """Forward recursion of E X_k and E X_k X_k' from zero; an oracle independent of the linear solvers."""
    p = model.order
    A = companion_matrix(model)
    e1 = np.eye(p)[0]
    m = np.zeros(p)
    S = np.zeros((p, p))
    a2 = model.alpha2
    for _ in range(steps):
        Am = A @ m
        c = model.mu**2 + model.sigma2 + a2 @ m
        S = A @ S @ A.T + c * np.outer(e1, e1) + model.mu * (np.outer(Am, e1) + np.outer(e1, Am))
        m = Am + model.mu * e1
    return m, S


class TestInnovationSpec:
    def test_poisson_moments(self):
        spec = InnovationSpec.poisson(0.94)
        assert (spec.mean, spec.variance) == (0.94, 0.94)

    def test_negative_binomial_sampling_moments(self, rng):
        spec = InnovationSpec.negative_binomial(2.0, 5.0)
        draws = spec.sample(rng, 400_000)
        assert abs(draws.mean() - 2.0) < 0.02
        assert abs(draws.var() - 5.0) < 0.08

    def test_finite_pmf_moments_by_summation(self):
        table = [0.2, 0.5, 0.0, 0.3]
        spec = InnovationSpec.finite_pmf(table)
        support = np.arange(4)
        assert spec.mean == pytest.approx(support @ table, abs=1e-15)
        assert spec.variance == pytest.approx(((support - spec.mean) ** 2) @ table, abs=1e-15)

    def test_finite_pmf_sampling(self, rng):
        spec = InnovationSpec.finite_pmf([0.2, 0.5, 0.0, 0.3])
        draws = spec.sample(rng, 200_000)
        freq = np.bincount(draws, minlength=4) / draws.size
        assert_allclose(freq, [0.2, 0.5, 0.0, 0.3], atol=0.005)

    @pytest.mark.parametrize("table", [[0.5, 0.4], [0.5, 0.6, -0.1], []])
    def test_finite_pmf_rejects_bad_tables(self, table):
        with pytest.raises(ValueError):
            InnovationSpec.finite_pmf(table)

    def test_degenerate_needs_integer(self):
        with pytest.raises(ValueError):
            InnovationSpec.degenerate(1.5)
        assert InnovationSpec.degenerate(3).variance == 0.0

    @pytest.mark.parametrize(
        "text, family, mean, var",
        [
            ("poisson:0.94", "poisson", 0.94, 0.94),
            ("negbin:2:5", "negative_binomial", 2.0, 5.0),
            ("degenerate:3", "degenerate", 3.0, 0.0),
            ("pmf:0.5,0.5", "finite_pmf", 0.5, 0.25),
        ],
    )
    def test_parse(self, text, family, mean, var):
        spec = InnovationSpec.parse(text)
        assert (spec.family, spec.mean, spec.variance) == (family, mean, var)


class TestInarModel:
    def test_coefficient_range(self):
        with pytest.raises(ValueError):
            InarModel((1.2,), InnovationSpec.poisson(1))
        with pytest.raises(ValueError):
            InarModel((-0.1,), InnovationSpec.poisson(1))

    def test_stability_and_c0(self):
        eps = InnovationSpec.poisson(1)
        assert InarModel((0.5, 0.4), eps).is_stable
        assert not InarModel((0.5, 0.5), eps).is_stable
        assert InarModel((0.3,), eps).satisfies_c0
        # no thinning and no innovation variance: degenerate
        assert not InarModel((0.0,), InnovationSpec.degenerate(2)).satisfies_c0
        assert not InarModel((0.3,), InnovationSpec.degenerate(0)).satisfies_c0

    def test_seasonal_encoding(self):
        model = InarModel.seasonal(12, {1: 0.5, 12: 0.2}, InnovationSpec.poisson(3))
        assert model.order == 12
        assert model.lag_support == (1, 12)
        assert model.alpha[0] == 0.5 and model.alpha[11] == 0.2 and sum(model.alpha[1:11]) == 0
        assert_array_equal(model.theta(), [0.5, 0.2, 3.0])

    def test_nonzero_coefficient_outside_support(self):
        with pytest.raises(ValueError):
            InarModel((0.2, 0.3), InnovationSpec.poisson(1), (1,))


class TestSimulate:
    def test_constant_immigration(self):
        model = InarModel((0.0,), InnovationSpec.degenerate(3))
        series = simulate(model, 4, initial=[5], seed=1)
        assert_array_equal(series.values, [3, 3, 3, 3])
        assert_array_equal(series.initial, [5])

    def test_absorbing_zero(self):
        model = InarModel((0.5, 0.3), InnovationSpec.degenerate(0))
        assert_array_equal(simulate(model, 10, initial=[0, 0], seed=1).values, np.zeros(10))

    def test_reproducible(self, inar2):
        a = simulate(inar2, 500, seed=42)
        b = simulate(inar2, 500, seed=42)
        c = simulate(inar2, 500, seed=43)
        assert_array_equal(a.full, b.full)
        assert not np.array_equal(a.values, c.values)

    def test_full_thinning_keeps_everything(self):
        model = InarModel((1.0,), InnovationSpec.degenerate(1))
        assert_array_equal(simulate(model, 5, initial=[2], seed=0).values, [3, 4, 5, 6, 7])

    def test_unstable_simulation_allowed(self):
        model = InarModel((0.7, 0.6), InnovationSpec.poisson(1))
        series = simulate(model, 50, initial=[1, 1], seed=3)
        assert series.values[-1] > series.values[0]

    def test_validation(self, inar1):
        with pytest.raises(ValueError):
            simulate(inar1, 0, initial=[1])
        with pytest.raises(ValueError):
            simulate(inar1, 5, initial=[1, 2])

    def test_stationary_start_uses_burn_in(self, inar1):
        assert burn_in_length(1) == 500 and burn_in_length(12) == 600
        series = simulate(inar1, 10, seed=5)
        assert series.initial.shape == (1,)

    def test_long_run_mean(self):
        model = InarModel((0.3,), InnovationSpec.poisson(0.94))
        values = simulate(model, 1_000_000, seed=8).values
        assert abs(values.mean() - 0.94 / 0.7) < 0.01

    def test_lagged_view(self):
        series = ObservationSeries([1, 2], [3, 4, 5])
        assert_array_equal(series.lagged(1), [2, 3, 4])
        assert_array_equal(series.lagged(2), [1, 2, 3])
        with pytest.raises(ValueError):
            series.lagged(3)

    def test_observation_series_rejects_negative(self):
        with pytest.raises(ValueError):
            ObservationSeries([0], [1, -1])
        with pytest.raises(ValueError):
            ObservationSeries([0], [])


class TestSimulateWithChange:
    def test_tau(self):
        spec = ChangeSpec(0.5, InarModel((0.3,), InnovationSpec.poisson(2)), InarModel((0.3,), InnovationSpec.poisson(1)))
        assert spec.tau(10) == 5
        assert spec.tau(1) == 1
        assert ChangeSpec(0.01, spec.pre, spec.post).tau(50) == 1

    @pytest.mark.parametrize(
        "innovation",
        [InnovationSpec.poisson(1.2), InnovationSpec.negative_binomial(1.0, 2.5), InnovationSpec.finite_pmf([0.3, 0.3, 0.4])],
    )
    def test_identical_regimes_match_simulate_bitwise(self, innovation):
        model = InarModel((0.35, 0.2), innovation)
        spec = ChangeSpec(0.37, model, model)
        for initial in (None, [2, 1]):
            assert_array_equal(
                simulate_with_change(spec, 777, initial=initial, seed=99).full,
                simulate(model, 777, initial=initial, seed=99).full,
            )

    def test_regime_switch_after_tau(self):
        pre = InarModel((0.0,), InnovationSpec.degenerate(1))
        post = InarModel((0.0,), InnovationSpec.degenerate(4))
        values = simulate_with_change(ChangeSpec(0.5, pre, post), 10, initial=[0], seed=0).values
        assert_array_equal(values, [1] * 5 + [4] * 5)

    def test_state_carried_across_change(self):
        pre = InarModel((0.0,), InnovationSpec.degenerate(7))
        post = InarModel((1.0,), InnovationSpec.degenerate(0))
        values = simulate_with_change(ChangeSpec(0.5, pre, post), 6, initial=[0], seed=0).values
        assert_array_equal(values, [7, 7, 7, 7, 7, 7])

    def test_post_change_mean(self):
        spec = ChangeSpec(0.5, InarModel((0.3,), InnovationSpec.poisson(2)), InarModel((0.3,), InnovationSpec.poisson(1)))
        values = simulate_with_change(spec, 100_000, seed=4).values
        assert abs(values[50_000:].mean() - 1 / 0.7) < 0.05

    def test_order_mismatch(self):
        with pytest.raises(ValueError):
            ChangeSpec(0.5, InarModel((0.3,), InnovationSpec.poisson(1)), InarModel((0.3, 0.1), InnovationSpec.poisson(1)))


class TestCompanionMatrix:
    def test_order_one(self):
        assert_array_equal(companion_matrix(InarModel((0.3,), InnovationSpec.poisson(1))), [[0.3]])

    def test_order_two(self):
        assert_array_equal(companion_matrix(InarModel((0.5, 0.2), InnovationSpec.poisson(1))), [[0.5, 0.2], [1, 0]])

    def test_spectral_radius_on_boundary(self):
        A = companion_matrix(InarModel((0.5, 0.5), InnovationSpec.poisson(1)))
        # roots of l^2 - 0.5 l - 0.5 are 1 and -0.5
        assert max(abs(np.linalg.eigvals(A))) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("alpha", [(0.2, 0.3, 0.1), (0.05, 0.0, 0.9), (0.6, 0.3, 0.05, 0.04)])
    def test_spectral_radius_below_one_iff_stable(self, alpha):
        A = companion_matrix(InarModel(alpha, InnovationSpec.poisson(1)))
        assert (max(abs(np.linalg.eigvals(A))) < 1) == (sum(alpha) < 1)


class TestStationaryMoments:
    def test_inar1_closed_form(self):
        model = InarModel((0.3,), InnovationSpec.poisson(0.94))
        mean, second = stationary_moments(model)
        lam = 0.94 / 0.7
        assert mean[0] == pytest.approx(1.342857142857, abs=1e-10)
        # the stationary law of a Poisson INAR(1) is Poisson(mu / (1 - alpha))
        assert second[0, 0] == pytest.approx(lam + lam**2, rel=1e-12)

    @pytest.mark.parametrize("innovation", [InnovationSpec.poisson(2.5), InnovationSpec.degenerate(2), InnovationSpec.finite_pmf([0.1, 0.6, 0.3])])
    def test_iid_case(self, innovation):
        mean, second = stationary_moments(InarModel((0.0,), innovation))
        assert mean[0] == pytest.approx(innovation.mean)
        assert second[0, 0] == pytest.approx(innovation.mean**2 + innovation.variance)

    @pytest.mark.parametrize(
        "alpha",
        [(0.4, 0.25), (0.1, 0.2, 0.3), (0.5, 0, 0, 0.2)],
    )
    def test_matches_forward_recursion(self, alpha):
        model = InarModel(alpha, InnovationSpec.negative_binomial(1.5, 3.0))
        mean, second = stationary_moments(model)
        m_it, S_it = _iterate_moments(model)
        assert_allclose(mean, m_it, rtol=1e-10)
        assert_allclose(second, S_it, rtol=1e-9)
        assert_allclose(mean, model.mu / (1 - sum(alpha)), rtol=1e-10)

    def test_seasonal_order_twelve(self):
        model = InarModel.seasonal(12, {1: 0.5, 12: 0.2}, InnovationSpec.poisson(3))
        mean, second = stationary_moments(model)
        m_it, S_it = _iterate_moments(model, steps=3000)
        assert_allclose(mean, 10.0, rtol=1e-10)
        assert_allclose(second, S_it, rtol=1e-8)

    def test_second_moment_against_simulation(self):
        model = InarModel((0.5,), InnovationSpec.poisson(1.0))
        _, second = stationary_moments(model)
        values = simulate(model, 1_000_000, seed=17).values.astype(float)
        assert np.mean(values**2) == pytest.approx(second[0, 0], rel=0.01)

    def test_lag_covariance_against_simulation(self, inar2):
        _, second = stationary_moments(inar2)
        x = simulate(inar2, 1_000_000, seed=3).values.astype(float)
        assert np.mean(x[1:] * x[:-1]) == pytest.approx(second[0, 1], rel=0.01)

    def test_unstable_rejected(self):
        with pytest.raises(UnstableModel):
            stationary_moments(InarModel((0.6, 0.4), InnovationSpec.poisson(1)))


class TestMomentMatrixC:
    def test_iid_poisson(self):
        assert_allclose(moment_matrix_C(InarModel((0.0,), InnovationSpec.poisson(1))), [[2, 1], [1, 1]])

    def test_degenerate_is_singular(self):
        C = moment_matrix_C(InarModel((0.0,), InnovationSpec.degenerate(2)))
        assert_allclose(C, [[4, 2], [2, 1]])
        assert np.linalg.eigvalsh(C)[0] == pytest.approx(0, abs=1e-12)

    def test_positive_definite_under_c0(self, inar2):
        assert inar2.satisfies_c0
        assert np.linalg.eigvalsh(moment_matrix_C(inar2))[0] > 0

    def test_against_simulation(self):
        model = InarModel((0.3,), InnovationSpec.poisson(0.94))
        C = moment_matrix_C(model)
        x = simulate(model, 1_000_000, seed=6).values.astype(float)
        empirical = np.array([[np.mean(x * x), np.mean(x)], [np.mean(x), 1.0]])
        assert_allclose(empirical, C, rtol=0.01)

    def test_restricted_support(self):
        model = InarModel.seasonal(12, {1: 0.5, 12: 0.2}, InnovationSpec.poisson(3))
        C = moment_matrix_C(model)
        _, second = stationary_moments(model)
        assert C.shape == (3, 3)
        assert C[0, 1] == pytest.approx(second[0, 11])
        assert C[2, 2] == 1.0


def test_autocovariance_decays_geometrically(inar2):
    """Empirical autocovariances follow the companion-matrix powers, which shrink geometrically."""
    mean, second = stationary_moments(inar2)
    cov = second - np.outer(mean, mean)
    A = companion_matrix(inar2)
    x = simulate(inar2, 400_000, seed=12).values.astype(float)
    x -= x.mean()
    radius = max(abs(np.linalg.eigvals(A)))
    previous = np.inf
    for h in range(1, 9):
        analytic = (np.linalg.matrix_power(A, h) @ cov)[0, 0]
        empirical = np.mean(x[h:] * x[:-h])
        assert empirical == pytest.approx(analytic, abs=0.05 * cov[0, 0])
        assert abs(analytic) <= cov[0, 0] * (h + 1) * radius**h
        assert abs(analytic) < previous
        previous = abs(analytic)
