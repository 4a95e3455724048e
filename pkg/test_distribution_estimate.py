"""Tests for three-fold CDFs, moments and validation errors."""

import warnings

import numpy as np
import pytest

from app.exceptions import DegenerateSample, DomainError, RangeTooNarrowWarning
from app.models.learning import TailMode
from app.models.sampling import RandomInputSpec
from app.services.benchmarks import toy_exact_cdf, toy_model
from app.services.distribution_estimate import (
    EmpiricalCdf,
    ThreeFoldCdf,
    ccdf,
    epsilon_e,
    estimate_three_fold_cdf,
    fold_moments,
    load_cdf_csv,
    moments_from_cdf,
    sample_moments,
    save_cdf_csv,
    save_three_fold_csv,
    tail_denominator,
)
from app.services.gp_surrogate import DesignSet, Prediction, fit_surrogate, three_fold_from_prediction
from app.services.sampling import initial_design, sample_pool, std_normal_cdf


@pytest.fixture
def rng():
    return np.random.default_rng(123)


def test_empirical_cdf_counts_right_continuously():
    cdf = EmpiricalCdf(np.array([4.0, 1.0, 3.0, 2.0]))
    assert cdf(2.5) == 0.5
    assert cdf(2.0) == 0.5
    assert cdf(0.0) == 0.0
    assert cdf(4.0) == 1.0


def test_ccdf():
    assert ccdf(0.0) == 1.0
    assert ccdf(0.75) == 0.25
    assert ccdf(ccdf(0.123)) == pytest.approx(0.123, abs=1e-15)
    with pytest.raises(DomainError):
        ccdf(1.2)


def test_zero_std_collapses_the_folds(rng):
    mean = rng.standard_normal(200)
    cdf = ThreeFoldCdf.from_outputs(three_fold_from_prediction(Prediction(mean, np.zeros(200)), kbar=2.0))
    y = rng.uniform(-3, 3, 100)
    plus, mid, minus = cdf.evaluate(y)
    np.testing.assert_array_equal(plus, mid)
    np.testing.assert_array_equal(mid, minus)


def test_three_fold_ordering_on_common_pool(rng):
    spec = RandomInputSpec.gaussian(2)
    inputs = initial_design(spec, 12, seed=0)
    surrogate = fit_surrogate(DesignSet(inputs, toy_model(inputs)))
    pool = sample_pool(spec, 20_000, seed=5)
    cdf = estimate_three_fold_cdf(surrogate, pool, kbar=2.0)

    y = rng.uniform(-6, 4, 1000)
    plus, mid, minus = cdf.evaluate(y)
    assert np.all(plus >= mid)
    assert np.all(mid >= minus)
    assert np.all((plus >= 0) & (plus <= 1))
    assert np.all(np.diff(mid[np.argsort(y)]) >= 0)


def test_negated_folds_keep_ordering(rng):
    mid = rng.standard_normal(500)
    cdf = ThreeFoldCdf.from_outputs(three_fold_from_prediction(Prediction(mid, rng.uniform(0, 0.3, 500)), 2.0))
    plus, center, minus = cdf.negated().evaluate(rng.uniform(-3, 3, 200))
    assert np.all(plus >= center)
    assert np.all(center >= minus)


def test_standard_normal_moments_by_quadrature():
    moments = moments_from_cdf(std_normal_cdf, -10.0, 10.0)
    assert moments.mean == pytest.approx(0.0, abs=1e-3)
    assert moments.std == pytest.approx(1.0, abs=1e-3)
    assert moments.skewness == pytest.approx(0.0, abs=1e-3)
    assert moments.kurtosis == pytest.approx(3.0, abs=5e-3)


def test_toy_exact_moments_by_quadrature():
    moments = moments_from_cdf(toy_exact_cdf, -15.0, 15.0)
    assert moments.mean == pytest.approx(-0.7979, abs=1e-4)
    assert moments.std == pytest.approx(1.1676, abs=1e-4)
    assert moments.skewness == pytest.approx(-0.1369, abs=2e-4)
    assert moments.kurtosis == pytest.approx(3.0617, abs=1e-3)


def test_uniform_empirical_moments(rng):
    moments = moments_from_cdf(EmpiricalCdf(rng.uniform(0.0, 1.0, 1_000_000)))
    assert moments.mean == pytest.approx(0.5, abs=0.002)
    assert moments.std == pytest.approx(1.0 / np.sqrt(12.0), abs=0.002)


def test_quadrature_agrees_with_sample_moments(rng):
    values = rng.gamma(3.0, 1.5, 100_000) + 1.0
    from_cdf = moments_from_cdf(EmpiricalCdf(values))
    direct = sample_moments(values)
    assert from_cdf.mean == pytest.approx(direct.mean, rel=5e-3)
    assert from_cdf.std == pytest.approx(direct.std, rel=5e-3)
    assert from_cdf.skewness == pytest.approx(direct.skewness, rel=2e-2)
    assert from_cdf.kurtosis == pytest.approx(direct.kurtosis, rel=2e-2)


def test_narrow_range_warns():
    with pytest.warns(RangeTooNarrowWarning):
        moments_from_cdf(std_normal_cdf, -1.0, 1.0)


def test_wide_range_does_not_warn():
    with warnings.catch_warnings():
        warnings.simplefilter("error", RangeTooNarrowWarning)
        moments_from_cdf(std_normal_cdf, -10.0, 10.0)


def test_analytic_cdf_needs_a_range():
    with pytest.raises(DomainError):
        moments_from_cdf(std_normal_cdf)


def test_sample_moments_examples(rng):
    pair = sample_moments(np.array([-1.0, 1.0]))
    assert (pair.mean, pair.std) == (0.0, 1.0)

    four = sample_moments(np.array([1.0, 2.0, 3.0, 4.0]))
    assert four.mean == 2.5
    assert four.std == pytest.approx(np.sqrt(1.25))

    assert sample_moments(rng.standard_normal(1_000_000)).kurtosis == pytest.approx(3.0, abs=0.03)


def test_sample_moments_rejects_constant_input():
    with pytest.raises(DegenerateSample):
        sample_moments(np.full(10, 2.0))


def test_fold_moments_tolerates_constant_fold():
    outputs = three_fold_from_prediction(Prediction(np.full(5, 1.5), np.zeros(5)), 2.0)
    moments = fold_moments(outputs)
    assert moments.mid.mean == 1.5
    assert moments.mid.std == 0.0


def test_tail_denominator_modes():
    assert tail_denominator(0.9, TailMode.BOTH, 1e-3) == pytest.approx(0.1)
    assert tail_denominator(0.9, TailMode.CDF_ONLY, 1e-3) == pytest.approx(0.9)
    assert tail_denominator(0.9, TailMode.CCDF_ONLY, 1e-3) == pytest.approx(0.1)
    assert tail_denominator(1.0, TailMode.BOTH, 1e-3) == 1e-3


def test_epsilon_e_zero_for_identical_cdfs():
    assert epsilon_e(toy_exact_cdf, toy_exact_cdf, -5.0, 3.0) == 0.0


def test_epsilon_e_constant_relative_error():
    def estimated(y):
        f = toy_exact_cdf(y)
        return f + 0.01 * np.minimum(f, 1.0 - f)

    assert epsilon_e(estimated, toy_exact_cdf, -5.0, 3.0) == pytest.approx(0.01, rel=1e-9)


def test_epsilon_e_symmetric_under_cdf_ccdf_exchange():
    def estimated(y):
        return std_normal_cdf(np.asarray(y) / 1.1)

    original = epsilon_e(estimated, std_normal_cdf, -3.0, 2.0)
    exchanged = epsilon_e(lambda y: 1.0 - estimated(y), lambda y: 1.0 - std_normal_cdf(y), -3.0, 2.0)
    assert exchanged == pytest.approx(original, rel=1e-10)


def test_epsilon_e_ccdf_only_uses_upper_tail():
    def estimated(y):
        return std_normal_cdf(np.asarray(y) - 0.05)

    both = epsilon_e(estimated, std_normal_cdf, 0.0, 3.0, TailMode.BOTH)
    ccdf_only = epsilon_e(estimated, std_normal_cdf, 0.0, 3.0, TailMode.CCDF_ONLY)
    assert both == pytest.approx(ccdf_only, rel=1e-12)
    assert epsilon_e(estimated, std_normal_cdf, 0.0, 3.0, TailMode.CDF_ONLY) < both


def test_cdf_table_round_trip_and_validation(tmp_path):
    y = np.linspace(-4.0, 4.0, 81)
    path = save_cdf_csv(tmp_path / "ref.csv", y, std_normal_cdf(y))
    assert path.read_text().splitlines()[0] == "y,F"
    table = load_cdf_csv(path, samples=1000)
    np.testing.assert_array_equal(table(y), std_normal_cdf(y))
    assert table(-100.0) == 0.0
    assert table(100.0) == 1.0
    assert table.samples == 1000

    save_cdf_csv(tmp_path / "bad.csv", y[::-1], std_normal_cdf(y[::-1]))
    with pytest.raises(DomainError):
        load_cdf_csv(tmp_path / "bad.csv")


def test_three_fold_csv_columns(tmp_path, rng):
    mid = rng.standard_normal(300)
    cdf = ThreeFoldCdf.from_outputs(three_fold_from_prediction(Prediction(mid, np.full(300, 0.1)), 2.0))
    path = save_three_fold_csv(tmp_path / "run.csv", cdf, np.array([1.0, -1.0, 0.0]))
    lines = path.read_text().splitlines()
    assert lines[0] == "y,F_minus,F_mid,F_plus"
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert np.all(rows[:, 1] <= rows[:, 2])
    assert np.all(rows[:, 2] <= rows[:, 3])
