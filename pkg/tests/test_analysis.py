from __future__ import annotations

import math

import numpy as np
import pytest

from banditlab.analysis import (
    AnalysisError,
    RunSummary,
    aggregate_runs,
    epoch_bounds,
    exact_tv_small_epoch,
    fit_scaling_exponent,
    kl_bernoulli,
    per_step_kl,
)


# -- Bernoulli KL ------------------------------------------------------------


def test_kl_zero_when_equal():
    assert kl_bernoulli(0.3, 0.3) == 0.0


def test_kl_deterministic_vs_fair_coin():
    assert kl_bernoulli(1.0, 0.5) == pytest.approx(math.log(2), abs=1e-15)


def test_kl_half_vs_shifted():
    # closed form: 0.5*ln(0.5/0.625) + 0.5*ln(0.5/0.375)
    expected = 0.5 * math.log(0.5 / 0.625) + 0.5 * math.log(0.5 / 0.375)
    assert kl_bernoulli(0.5, 0.625) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.0322692605687, abs=1e-12)


def test_kl_degenerate_reference():
    assert kl_bernoulli(1.0, 1.0) == 0.0
    assert math.isinf(kl_bernoulli(0.5, 0.0))
    assert math.isinf(kl_bernoulli(0.5, 1.0))


# -- per-step KL -------------------------------------------------------------


def test_per_step_kl_zero_at_zero():
    assert per_step_kl(0.0) == 0.0


def test_per_step_kl_reference_values():
    assert per_step_kl(0.125) == pytest.approx(0.5 * math.log(1 + 0.0625 / 0.9375), rel=1e-14)
    assert per_step_kl(0.25) == pytest.approx(0.5 * math.log(4.0 / 3.0), rel=1e-14)
    assert per_step_kl(0.25) <= 4 * 0.25**2


def test_per_step_kl_equals_kl_bernoulli_form():
    for eps in (0.01, 0.1, 0.2, 0.3):
        assert per_step_kl(eps) == pytest.approx(kl_bernoulli(0.5, 0.5 + eps), rel=1e-12)


def test_per_step_kl_quadratic_bound_dense_grid():
    for eps in np.linspace(0.0, 0.25, 501):
        assert per_step_kl(float(eps)) <= 4 * eps * eps + 1e-15


def test_per_step_kl_rejects_half():
    with pytest.raises(AnalysisError):
        per_step_kl(0.5)


# -- epoch bounds -------------------------------------------------------------


def test_epoch_bounds_reference_pair():
    pair = epoch_bounds(0.125, 2)
    assert pair.epoch_kl_bound == 0.125
    assert pair.tv_bound == 0.25
    assert pair.per_step_kl == per_step_kl(0.125)


def test_epoch_bounds_zero_eps():
    pair = epoch_bounds(0.0, 50)
    assert pair.epoch_kl_bound == 0.0 and pair.tv_bound == 0.0 and pair.per_step_kl == 0.0


def test_epoch_bounds_near_feasibility_boundary():
    pair = epoch_bounds(0.1, 12)
    assert 8 * 0.1**2 * 12 == pytest.approx(0.96)
    assert pair.tv_bound == pytest.approx(0.1 * math.sqrt(24))
    assert pair.tv_bound <= 0.5


def test_epoch_bounds_rejects_violation():
    with pytest.raises(AnalysisError):
        epoch_bounds(0.25, 4)


# -- exact TV oracle -----------------------------------------------------------


def tv_by_full_enumeration(eps: float, d: int) -> float:
    """Independent oracle: iterate all 2^d strings explicitly."""
    total = 0.0
    for s in range(2**d):
        ones = bin(s).count("1")
        p1 = 0.5**d
        p2 = (0.5 + eps) ** ones * (0.5 - eps) ** (d - ones)
        total += abs(p1 - p2)
    return 0.5 * total


def test_exact_tv_single_step():
    assert exact_tv_small_epoch(0.125, 1) == pytest.approx(0.125, abs=1e-15)


def test_exact_tv_zero_eps():
    assert exact_tv_small_epoch(0.0, 7) == 0.0


def test_exact_tv_two_steps_frozen_value():
    # 4-outcome enumeration: 0.5*(|.25-.140625| + 2*|.25-.234375| + |.25-.390625|)
    value = exact_tv_small_epoch(0.125, 2)
    assert value == pytest.approx(0.140625, abs=1e-15)
    assert value <= 0.125 * math.sqrt(4.0)


def test_exact_tv_matches_string_enumeration():
    for eps, d in [(0.05, 3), (0.125, 5), (0.2, 8), (0.3, 4)]:
        assert exact_tv_small_epoch(eps, d) == pytest.approx(
            tv_by_full_enumeration(eps, d), abs=1e-13
        )


def test_exact_tv_rejects_large_epoch():
    with pytest.raises(AnalysisError):
        exact_tv_small_epoch(0.1, 13)


def test_pinsker_chain_on_grid():
    for d in range(1, 13):
        for frac in (0.2, 0.6, 0.95):
            eps = frac / math.sqrt(8 * d)
            tv = exact_tv_small_epoch(eps, d)
            pinsker = math.sqrt(d * per_step_kl(eps) / 2)
            assert tv <= pinsker + 1e-12
            assert pinsker <= eps * math.sqrt(2 * d) + 1e-12


# -- scaling fits --------------------------------------------------------------


def test_fit_exact_power_law_two_thirds():
    pts = [(2**k, 3.0 * (2**k) ** (2 / 3)) for k in range(10, 17)]
    fit = fit_scaling_exponent(pts)
    assert fit.alpha == pytest.approx(2 / 3, abs=1e-9)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-9)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_linear_growth():
    pts = [(2**k, 0.4 * 2**k) for k in range(10, 17)]
    assert fit_scaling_exponent(pts).alpha == pytest.approx(1.0, abs=1e-9)


def test_fit_logarithmic_curve_has_small_exponent():
    # OLS slope of log(5*ln T) on log T over 2^10..2^18; the mean of 1/ln T
    # over that range puts the exact value just above 0.105.
    pts = [(2**k, 5.0 * math.log(2**k)) for k in range(10, 19)]
    fit = fit_scaling_exponent(pts)
    assert fit.alpha == pytest.approx(0.10521011950140059, abs=1e-12)
    assert fit.alpha < 0.15


def test_fit_planted_exponent_recovery():
    for alpha in (0.0, 0.5, 2 / 3, 1.0):
        pts = [(2**k, 2.0 * (2**k) ** alpha) for k in range(10, 17)]
        assert fit_scaling_exponent(pts).alpha == pytest.approx(alpha, abs=1e-6)


def test_fit_drops_nonpositive_points_with_warning():
    pts = [(2**10, 0.0), (2**11, 2.0), (2**12, 3.0), (2**13, 4.0)]
    with pytest.warns(UserWarning):
        fit = fit_scaling_exponent(pts)
    assert len(fit.points) == 3


def test_fit_rejects_too_few_surviving_points():
    with pytest.raises(AnalysisError):
        fit_scaling_exponent([(2**10, 1.0), (2**11, 2.0)])
    with pytest.warns(UserWarning):
        with pytest.raises(AnalysisError):
            fit_scaling_exponent([(2**10, 0.0), (2**11, 0.0), (2**12, 0.0)])


def test_fit_rejects_non_increasing_horizons():
    with pytest.raises(AnalysisError):
        fit_scaling_exponent([(2**12, 1.0), (2**11, 2.0), (2**13, 3.0)])


def test_fit_burn_in_excludes_small_horizons():
    pts = [(256, 100.0), (2**10, 8.0), (2**11, 8.0 * 2**0.5), (2**12, 16.0)]
    with pytest.warns(UserWarning):
        fit = fit_scaling_exponent(pts)
    assert all(T >= 1024 for T, _ in fit.points)


# -- aggregation ---------------------------------------------------------------


def test_aggregate_identical_runs_zero_stderr():
    rows = aggregate_runs([RunSummary(100, s, 5.0) for s in range(4)])
    assert rows[0].mean == 5.0 and rows[0].stderr == 0.0


def test_aggregate_two_runs_reference_values():
    rows = aggregate_runs([RunSummary(64, 0, 10.0), RunSummary(64, 1, 14.0)])
    assert rows[0].mean == 12.0
    assert rows[0].stderr == pytest.approx(2.0)
    assert rows[0].lo95 == pytest.approx(12 - 3.92)


def test_aggregate_gaussian_mean_within_3_sigma():
    rng = np.random.default_rng(0)
    mu = 7.0
    finals = rng.normal(mu, 1.0, size=100)
    rows = aggregate_runs([RunSummary(32, s, float(v)) for s, v in enumerate(finals)])
    assert abs(rows[0].mean - mu) <= 3 / math.sqrt(100)


def test_aggregate_order_invariance_and_min_seeds():
    a = aggregate_runs([RunSummary(10, 1, 2.0), RunSummary(10, 0, 1.0)])
    b = aggregate_runs([RunSummary(10, 0, 1.0), RunSummary(10, 1, 2.0)])
    assert a == b
    with pytest.raises(AnalysisError):
        aggregate_runs([RunSummary(10, 0, 1.0)])
