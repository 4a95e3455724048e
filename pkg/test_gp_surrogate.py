"""Tests for the kriging surrogate."""

import numpy as np
import pytest

from app.exceptions import (
    DegenerateOutputsWarning,
    DimensionMismatch,
    DomainError,
    DuplicatePoint,
    SingularCovariance,
)
from app.models.sampling import RandomInputSpec
from app.services.benchmarks import toy_model
from app.services import gp_surrogate
from app.services.gp_surrogate import (
    MAX_NUGGET,
    MIN_NUGGET,
    DesignSet,
    FitOptions,
    Prediction,
    fit_surrogate,
    three_fold_from_prediction,
)
from app.services.sampling import initial_design, sample_pool


def smooth_2d(points):
    return np.sin(2.0 * points[:, 0]) + np.cos(2.0 * points[:, 1])


@pytest.fixture
def smooth_design():
    inputs = initial_design(RandomInputSpec.uniform(2, -2.0, 2.0), 12, seed=1)
    return DesignSet(inputs, smooth_2d(inputs))


def test_two_point_design_interpolates():
    surrogate = fit_surrogate(DesignSet(np.array([[0.0], [1.0]]), np.array([0.0, 1.0])))
    prediction = surrogate.predict(np.array([[0.0], [1.0]]))
    np.testing.assert_allclose(prediction.mean, [0.0, 1.0], atol=1e-6)
    assert np.all(prediction.std <= 1e-4 * 0.5)


def test_interpolation_at_training_points(smooth_design):
    surrogate = fit_surrogate(smooth_design)
    prediction = surrogate.predict(smooth_design.inputs)
    outputs = smooth_design.outputs
    np.testing.assert_allclose(prediction.mean, outputs, atol=1e-6 * np.ptp(outputs))
    assert np.all(prediction.std <= 1e-4 * outputs.std())


def test_randomized_designs_interpolate():
    for seed in range(200):
        inputs = initial_design(RandomInputSpec.uniform(2, -2.0, 2.0), 10, seed=seed)
        design = DesignSet(inputs, smooth_2d(inputs))
        prediction = fit_surrogate(design, FitOptions(seed=seed)).predict(inputs)
        assert np.max(np.abs(prediction.mean - design.outputs)) <= 1e-6 * np.ptp(design.outputs)
        assert np.all(prediction.std >= 0.0)


def test_held_out_point_recovered_after_refit():
    x = np.array([[-2.0], [-1.0], [0.5], [1.0], [2.0]])
    y = x[:, 0] ** 2
    design = DesignSet(x[:4], y[:4])
    design.add(x[4], y[4])
    surrogate = fit_surrogate(design)
    assert surrogate.predict(x[4:]).mean[0] == pytest.approx(4.0, abs=1e-5 * np.ptp(y))


def test_prior_reversion_far_from_data(smooth_design):
    surrogate = fit_surrogate(smooth_design)
    far = smooth_design.inputs.mean(axis=0) + 20.0 * surrogate.length_scales.max() * surrogate.x_scale * 10.0
    prediction = surrogate.predict(far[np.newaxis, :])
    assert prediction.mean[0] == pytest.approx(surrogate.trend, rel=1e-6)
    assert prediction.std[0] == pytest.approx(np.sqrt(surrogate.process_variance), rel=1e-6)


def test_std_is_largest_in_the_middle_of_a_symmetric_gap():
    x = np.array([[-1.0], [-0.5], [0.5], [1.0]])
    surrogate = fit_surrogate(DesignSet(x, x[:, 0] ** 2))
    grid = np.linspace(-0.5, 0.5, 101)[:, np.newaxis]
    std = surrogate.predict(grid).std
    assert std[50] >= std.max() - 1e-9 * np.sqrt(surrogate.process_variance)


def test_toy_surrogate_beats_constant_predictor():
    spec = RandomInputSpec.gaussian(2)
    inputs = initial_design(spec, 12, seed=0)
    surrogate = fit_surrogate(DesignSet(inputs, toy_model(inputs)))
    test_points = sample_pool(spec, 2000, seed=42).points
    truth = toy_model(test_points)
    rmse = np.sqrt(np.mean((surrogate.predict(test_points).mean - truth) ** 2))
    assert rmse < truth.std()


def test_fit_is_deterministic(smooth_design):
    first = fit_surrogate(smooth_design, FitOptions(seed=3))
    second = fit_surrogate(smooth_design, FitOptions(seed=3))
    points = np.random.default_rng(0).uniform(-2, 2, size=(50, 2))
    np.testing.assert_array_equal(first.length_scales, second.length_scales)
    np.testing.assert_array_equal(first.predict(points).mean, second.predict(points).mean)
    np.testing.assert_array_equal(first.predict(points).std, second.predict(points).std)


def test_constant_shift_moves_mean_only(smooth_design):
    shifted = DesignSet(smooth_design.inputs, smooth_design.outputs + 3.0)
    points = np.random.default_rng(1).uniform(-2, 2, size=(100, 2))
    base = fit_surrogate(smooth_design).predict(points)
    moved = fit_surrogate(shifted).predict(points)
    scale = smooth_design.outputs.std()
    np.testing.assert_allclose(moved.mean - 3.0, base.mean, rtol=1e-8, atol=1e-8 * scale)
    np.testing.assert_allclose(moved.std, base.std, rtol=1e-8, atol=1e-8 * scale)


def test_constant_shift_on_randomized_designs():
    points = np.random.default_rng(3).uniform(-2, 2, size=(200, 2))
    for seed in range(10):
        inputs = initial_design(RandomInputSpec.uniform(2, -2.0, 2.0), 15, seed=seed)
        design = DesignSet(inputs, smooth_2d(inputs))
        shifted = DesignSet(inputs, design.outputs + 3.0)
        base = fit_surrogate(design, FitOptions(seed=seed)).predict(points)
        moved = fit_surrogate(shifted, FitOptions(seed=seed)).predict(points)
        scale = design.outputs.std()
        np.testing.assert_allclose(moved.mean - 3.0, base.mean, rtol=1e-8, atol=1e-8 * scale)
        np.testing.assert_allclose(moved.std, base.std, rtol=1e-8, atol=1e-8 * scale)


def test_chunked_prediction_matches_single_pass(smooth_design):
    surrogate = fit_surrogate(smooth_design)
    points = np.random.default_rng(2).uniform(-2, 2, size=(1000, 2))
    whole = surrogate.predict(points)
    chunked = surrogate.predict(points, chunk_size=77)
    np.testing.assert_allclose(chunked.mean, whole.mean, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(chunked.std, whole.std, rtol=1e-12, atol=1e-12)


def test_constant_outputs_give_flagged_constant_surrogate():
    design = DesignSet(np.array([[0.0], [1.0], [2.0]]), np.array([4.0, 4.0, 4.0]))
    with pytest.warns(DegenerateOutputsWarning):
        surrogate = fit_surrogate(design)
    assert surrogate.degenerate
    prediction = surrogate.predict(np.array([[0.5], [7.0]]))
    np.testing.assert_array_equal(prediction.mean, [4.0, 4.0])
    np.testing.assert_array_equal(prediction.std, [0.0, 0.0])


def test_three_fold_substitution():
    outputs = three_fold_from_prediction(Prediction(np.array([2.0]), np.array([0.5])), kbar=2.0)
    assert (outputs.plus[0], outputs.mid[0], outputs.minus[0]) == (1.0, 2.0, 3.0)


def test_three_fold_ordering_and_zero_variance_collapse(smooth_design):
    surrogate = fit_surrogate(smooth_design)
    points = np.random.default_rng(3).uniform(-2, 2, size=(500, 2))
    folds = surrogate.three_fold_predict(points, kbar=2.0)
    assert np.all(folds.plus <= folds.mid)
    assert np.all(folds.mid <= folds.minus)

    collapsed = three_fold_from_prediction(Prediction(np.arange(3.0), np.zeros(3)), kbar=2.0)
    np.testing.assert_array_equal(collapsed.plus, collapsed.minus)


def test_three_fold_rejects_non_positive_kbar(smooth_design):
    with pytest.raises(DomainError):
        fit_surrogate(smooth_design).three_fold_predict(smooth_design.inputs, kbar=0.0)


def test_predict_rejects_wrong_dimension(smooth_design):
    with pytest.raises(DimensionMismatch):
        fit_surrogate(smooth_design).predict(np.zeros((3, 5)))


def test_design_rejects_duplicates():
    with pytest.raises(DuplicatePoint):
        DesignSet(np.array([[0.0, 1.0], [0.0, 1.0], [2.0, 2.0]]), np.array([1.0, 1.0, 2.0]))

    design = DesignSet(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
    assert design.contains(np.array([1.0]))
    with pytest.raises(DuplicatePoint):
        design.add(np.array([1.0]), 5.0)
    with pytest.raises(DimensionMismatch):
        design.add(np.array([1.0, 2.0]), 5.0)


def ill_conditioned_correlation():
    points = np.linspace(0.0, 1.0, 30).reshape(-1, 1)
    return gp_surrogate._correlation(points, points, np.array([100.0]))


def test_nugget_escalates_tenfold_until_factorization_succeeds():
    corr = ill_conditioned_correlation() - 3e-7 * np.eye(30)
    factor, nugget = gp_surrogate._factorize(corr, MIN_NUGGET, MAX_NUGGET)
    assert factor is not None
    assert nugget == pytest.approx(1e-6, rel=1e-9)


def test_nugget_ladder_gives_up_past_the_maximum():
    corr = ill_conditioned_correlation() - 1e-3 * np.eye(30)
    factor, nugget = gp_surrogate._factorize(corr, MIN_NUGGET, MAX_NUGGET)
    assert factor is None
    assert nugget > MAX_NUGGET


def test_fit_raises_when_no_nugget_factorizes(smooth_design, monkeypatch):
    monkeypatch.setattr(gp_surrogate, "_factorize", lambda corr, low, high: (None, high * 10.0))
    with pytest.raises(SingularCovariance):
        fit_surrogate(smooth_design, FitOptions(starts=2))


def test_likelihood_gradient_matches_finite_differences(smooth_design):
    x = (smooth_design.inputs - smooth_design.inputs.mean(axis=0)) / smooth_design.inputs.std(axis=0)
    y = (smooth_design.outputs - smooth_design.outputs.mean()) / smooth_design.outputs.std()

    def nll(theta):
        return gp_surrogate._profile(x, y, theta, MIN_NUGGET, MAX_NUGGET).neg_log_likelihood

    step = 1e-4
    for theta in ([0.0, 0.0], [-0.7, 0.4], [-0.3, -0.5]):
        theta = np.asarray(theta)
        analytic = gp_surrogate._profile(x, y, theta, MIN_NUGGET, MAX_NUGGET, with_gradient=True).gradient
        numeric = [(nll(theta + step * e) - nll(theta - step * e)) / (2 * step) for e in np.eye(2)]
        np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-3)
