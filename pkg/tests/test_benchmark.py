import numpy as np
import pytest

from cotv.benchmark import (
    approximation_convergence_study,
    bound_sweep,
    build_lottery_pair,
    congestion_multiplier,
    rp_threshold_experiment,
    rra_tradeoff_check,
    vertex_identity_check,
)
from cotv.distributions import (
    Degenerate,
    Exponential,
    Gamma,
    LogNormal,
    Uniform,
)
from cotv.errors import DomainError, ValidationError
from cotv.numerics import RngStream, Tolerance
from cotv.preferences import (
    AffineUtility,
    ConstantPrudenceUtility,
    PowerUtility,
    PureQuadraticUtility,
    QuadraticUtility,
)

TIGHT = Tolerance(abs_tol=1e-12, rel_tol=1e-11, max_iter=400)


class TestLotteryPair:
    def test_equal_means_and_structure(self):
        pair = build_lottery_pair(10.0, 0.1, [-0.2, 0.2], [0.5, 0.5])
        assert pair.s1.mean() == pytest.approx(pair.s2.mean(), abs=1e-12)
        assert pair.s1.outcomes.size == 3
        assert pair.s2.outcomes.size == 3
        # risk attaches to the shortened branch in the first lottery, so it
        # has less spread but also less right-tail mass
        assert pair.s1.variance() < pair.s2.variance()
        m3_s1 = pair.s1.skewness() * pair.s1.variance() ** 1.5
        m3_s2 = pair.s2.skewness() * pair.s2.variance() ** 1.5
        assert m3_s1 < m3_s2
        assert pair.s1.outcomes.max() < pair.s2.outcomes.max()

    def test_validation(self):
        with pytest.raises(ValidationError):
            build_lottery_pair(10.0, 1.5, [-0.2, 0.2], [0.5, 0.5])
        with pytest.raises(ValidationError):
            build_lottery_pair(10.0, 0.1, [-0.2, 0.3], [0.5, 0.5])
        with pytest.raises(ValidationError):
            build_lottery_pair(10.0, 0.1, [-1.5, 1.5], [0.5, 0.5])


class TestRpThresholdExperiment:
    def test_high_prudence_prefers_lower_skewness(self):
        u = ConstantPrudenceUtility(prudence=2.5, interval=(1.0, 40.0))
        result = rp_threshold_experiment(u, 10.0, 0.1, [-0.2, 0.2], [0.5, 0.5])
        assert result.prefers == "S2"
        assert result.predicted_by_rp == "S2"
        assert result.agree is True

    def test_low_prudence_prefers_lower_variance(self):
        u = ConstantPrudenceUtility(prudence=1.5, interval=(1.0, 40.0))
        result = rp_threshold_experiment(u, 10.0, 0.1, [-0.2, 0.2], [0.5, 0.5])
        assert result.prefers == "S1"
        assert result.predicted_by_rp == "S1"
        assert result.agree is True

    def test_threshold_value_is_indifferent(self):
        # at constant relative prudence exactly 2 the lotteries tie
        u = ConstantPrudenceUtility(prudence=2.0, interval=(1.0, 40.0))
        result = rp_threshold_experiment(u, 10.0, 0.1, [-0.2, 0.2], [0.5, 0.5])
        assert result.prefers == "indifferent"

    def test_no_perturbation_is_indifferent(self):
        u = ConstantPrudenceUtility(prudence=2.5, interval=(1.0, 40.0))
        result = rp_threshold_experiment(u, 10.0, 0.1, [0.0], [1.0])
        assert result.prefers == "indifferent"

    def test_quadratic_prefers_lower_variance(self):
        u = PureQuadraticUtility(a=-1.0)
        result = rp_threshold_experiment(u, 10.0, 0.05, [-0.1, 0.1], [0.5, 0.5])
        assert result.prefers == "S1"
        assert result.predicted_by_rp == "S1"

    def test_domain_error_outside_interval(self):
        u = ConstantPrudenceUtility(prudence=2.5, interval=(9.0, 11.0))
        with pytest.raises(DomainError):
            rp_threshold_experiment(u, 10.0, 0.1, [-0.2, 0.2], [0.5, 0.5])


class TestRraTradeoffCheck:
    def test_pure_quadratic_balances_at_benchmark(self):
        result = rra_tradeoff_check(PureQuadraticUtility(a=-1.0), 1.0)
        assert result["sign"] == 0
        assert result["rel_risk_aversion"] == pytest.approx(1.0)
        assert result["consistent_with_r2"]

    def test_power_low_rra_prefers_mean_margin(self):
        result = rra_tradeoff_check(PowerUtility(exponent=1.5), 2.0)
        assert result["rel_risk_aversion"] == pytest.approx(0.5)
        assert result["variance_margin"] < result["mean_margin"]
        assert result["consistent_with_r2"]

    def test_tuned_high_rra_flips_inequality(self):
        # slope -1/2 at t=1 with unit curvature puts R2(1) = 2
        u = ConstantPrudenceUtility(prudence=3.0, curvature=1.0,
                                    slope_at_one=-0.5, interval=(1.0, 10.0))
        result = rra_tradeoff_check(u, 1.0)
        assert result["rel_risk_aversion"] == pytest.approx(2.0)
        assert result["variance_margin"] > result["mean_margin"]
        assert result["consistent_with_r2"]

    def test_identity_holds_on_grid(self):
        for u in (QuadraticUtility(a=-1.0, b=-2.0), PowerUtility(2.5)):
            for t in np.linspace(0.5, 9.5, 19):
                assert rra_tradeoff_check(u, float(t))["consistent_with_r2"]


class TestVertexIdentity:
    def test_degenerate_residual_zero(self):
        assert vertex_identity_check(-1.0, -1.0, 0.0, Degenerate(3.0)) \
            == pytest.approx(0.0, abs=1e-14)

    def test_exponential(self):
        residual = vertex_identity_check(-1.0, -1.0, 0.0, Exponential(1.0), TIGHT)
        assert residual < 1e-10

    def test_random_sweep(self):
        gen = RngStream(seed=17).generator()
        models = [Uniform(0.0, 1.0), Exponential(1.0), LogNormal(0.0, 0.5),
                  Gamma(4.0, 2.0)]
        for i in range(40):
            a = -float(gen.uniform(0.1, 8.0))
            h = -float(gen.uniform(0.0, 2.0))
            k = -float(gen.uniform(0.0, 5.0))
            residual = vertex_identity_check(a, h, k, models[i % 4], TIGHT)
            assert residual < 1e-10

    def test_rejects_wrong_sign_parameters(self):
        with pytest.raises(ValidationError):
            vertex_identity_check(1.0, -1.0, 0.0, Exponential(1.0))
        with pytest.raises(ValidationError):
            vertex_identity_check(-1.0, 0.5, 0.0, Exponential(1.0))


class TestBoundSweep:
    def test_exponential_pure_quadratic_attains_half(self):
        result = bound_sweep([(-1.0, 0.0)], [Exponential(1.0)], tol=TIGHT)
        row = result.rows[0]
        assert row.rho_exact == pytest.approx(0.5, abs=1e-9)
        assert row.bound == pytest.approx(0.5)
        assert abs(row.slack) <= 1e-9
        assert result.clean

    def test_negative_b_leaves_slack(self):
        result = bound_sweep([(-1.0, -2.0)], [Exponential(1.0)], tol=TIGHT)
        assert result.rows[0].slack > 1e-3
        assert result.clean

    def test_degenerate_row(self):
        result = bound_sweep([(-1.0, 0.0)], [Degenerate(5.0)], tol=TIGHT)
        assert result.rows[0].rho_exact == pytest.approx(0.0, abs=1e-12)
        assert result.rows[0].bound == 0.0
        assert result.clean

    def test_grid_is_clean_and_tracks_equality(self):
        grid = [(a, b) for a in (-0.5, -2.0) for b in (0.0, -1.0)]
        models = [Exponential(1.0), Uniform(0.2, 1.8)]
        result = bound_sweep(grid, models, tol=TIGHT)
        assert result.clean
        assert len(result.rows) == len(grid) * len(models)
        assert result.max_equality_gap <= 1e-9

    def test_eta_consistency_flag_on_every_row(self):
        result = bound_sweep([(-1.0, 0.0), (-1.0, -2.0)],
                             [Exponential(1.0), Uniform(0.2, 1.8)], tol=TIGHT)
        assert not result.eta_violations
        for row in result.rows:
            assert row.eta == 1.0  # quadratic utilities
            assert row.eta_consistent


class TestCongestionMultiplier:
    def test_values(self):
        assert congestion_multiplier(0.5) == 1.5
        assert congestion_multiplier(0.0) == 1.0
        assert congestion_multiplier(0.08) == pytest.approx(1.08)

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            congestion_multiplier(-0.1)


class TestConvergenceStudy:
    def test_pure_quadratic_scaled_error_monotone(self):
        rows = approximation_convergence_study(
            PureQuadraticUtility(a=-1.0), [-1.0, 1.0], [0.5, 0.5],
            [0.4, 0.2, 0.1], tol=TIGHT)
        scaled = [row["scaled_error"] for row in rows]
        assert scaled[0] > scaled[1] > scaled[2]
        ratio = rows[0]["abs_error"] / rows[1]["abs_error"]
        assert 14.0 <= ratio <= 18.0

    def test_risk_neutral_errors_vanish(self):
        rows = approximation_convergence_study(
            AffineUtility(), [-1.0, 1.0], [0.5, 0.5], [0.4, 0.2], tol=TIGHT)
        for row in rows:
            assert row["abs_error"] == pytest.approx(0.0, abs=1e-12)

    def test_requires_standardised_x(self):
        with pytest.raises(ValidationError):
            approximation_convergence_study(
                PureQuadraticUtility(a=-1.0), [-1.0, 2.0], [0.5, 0.5], [0.2])

    def test_requires_decreasing_grid(self):
        with pytest.raises(ValidationError):
            approximation_convergence_study(
                PureQuadraticUtility(a=-1.0), [-1.0, 1.0], [0.5, 0.5],
                [0.1, 0.2])
