"""Ordinary kriging surrogate with an anisotropic squared-exponential kernel."""

import logging
import warnings
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from app.exceptions import (
    DegenerateOutputsWarning,
    DimensionMismatch,
    DomainError,
    DuplicatePoint,
    SingularCovariance,
)
from app.services.sampling import STREAM_OPTIMIZER, derive_rng

logger = logging.getLogger(__name__)

LENGTH_SCALE_BOUNDS = (1e-2, 1e2)
VARIANCE_BOUNDS = (1e-6, 1e6)
MIN_NUGGET = 1e-10
MAX_NUGGET = 1e-4
DUPLICATE_TOLERANCE = 1e-10
SEARCH_DECIMALS = 10
OPTIMIZER_OPTIONS = {"ftol": 1e-15, "gtol": 1e-12}

_FAILED_LIKELIHOOD = 1e300


class Prediction(NamedTuple):
    """Predictive mean and standard deviation, one entry per point."""
    mean: np.ndarray
    std: np.ndarray


class ThreeFoldOutputs(NamedTuple):
    """Outputs of the lower-bound, mean and upper-bound metamodels."""
    plus: np.ndarray
    mid: np.ndarray
    minus: np.ndarray


class FitOptions(BaseModel):
    """Hyperparameter search settings."""
    starts: int = Field(default=5, ge=1)
    seed: int = Field(default=0, ge=0)
    iteration: int = 0
    warm_start: Optional[List[float]] = None
    min_nugget: float = Field(default=MIN_NUGGET, gt=0)
    max_nugget: float = Field(default=MAX_NUGGET, gt=0)


def _input_scale(inputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    center = inputs.mean(axis=0)
    scale = inputs.std(axis=0)
    scale[scale == 0.0] = 1.0
    return center, scale


class DesignSet:
    """Training inputs and true model outputs."""

    def __init__(self, inputs: np.ndarray, outputs: np.ndarray):
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        outputs = np.asarray(outputs, dtype=float).ravel()
        if inputs.shape[0] != outputs.shape[0]:
            raise DimensionMismatch(f"{inputs.shape[0]} inputs but {outputs.shape[0]} outputs")
        if inputs.shape[0] < 2:
            raise DomainError("a design needs at least 2 points")

        self._inputs = inputs.copy()
        self._outputs = outputs.copy()
        center, scale = _input_scale(self._inputs)
        standardized = (self._inputs - center) / scale
        distances = cdist(standardized, standardized)
        np.fill_diagonal(distances, np.inf)
        if distances.min() <= DUPLICATE_TOLERANCE:
            raise DuplicatePoint("design inputs must be pairwise distinct")

    @property
    def inputs(self) -> np.ndarray:
        return self._inputs

    @property
    def outputs(self) -> np.ndarray:
        return self._outputs

    @property
    def dimension(self) -> int:
        return self._inputs.shape[1]

    @property
    def size(self) -> int:
        return self._inputs.shape[0]

    def contains(self, point: np.ndarray) -> bool:
        """True when point is within the duplicate tolerance of a training input."""
        point = np.asarray(point, dtype=float).reshape(1, -1)
        center, scale = _input_scale(self._inputs)
        distances = cdist((point - center) / scale, (self._inputs - center) / scale)
        return bool(distances.min() <= DUPLICATE_TOLERANCE)

    def add(self, point: np.ndarray, value: float) -> None:
        """Append one training pair, rejecting duplicates."""
        point = np.asarray(point, dtype=float).ravel()
        if point.shape[0] != self.dimension:
            raise DimensionMismatch(f"expected {self.dimension}-D point, got {point.shape[0]}-D")
        if self.contains(point):
            raise DuplicatePoint(f"point {point.tolist()} already in design")
        self._inputs = np.vstack([self._inputs, point])
        self._outputs = np.append(self._outputs, float(value))


def _correlation(a: np.ndarray, b: np.ndarray, length_scales: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * cdist(a / length_scales, b / length_scales, "sqeuclidean"))


def _factorize(corr: np.ndarray, min_nugget: float, max_nugget: float):
    """Cholesky factor of corr + nugget*I, escalating the nugget tenfold on failure."""
    nugget = min_nugget
    identity = np.eye(corr.shape[0])
    while nugget <= max_nugget * (1.0 + 1e-12):
        try:
            factor = linalg.cho_factor(corr + nugget * identity, lower=True)
            if np.all(np.isfinite(factor[0])):
                return factor, nugget
        except linalg.LinAlgError:
            pass
        nugget *= 10.0
    return None, nugget


class _Profile(NamedTuple):
    neg_log_likelihood: float
    factor: tuple
    nugget: float
    trend: float
    variance: float
    weights: np.ndarray
    gradient: Optional[np.ndarray] = None


def _profile(x: np.ndarray, y: np.ndarray, log_length_scales: np.ndarray,
             min_nugget: float, max_nugget: float, with_gradient: bool = False) -> Optional[_Profile]:
    """Concentrated likelihood with trend and variance profiled out."""
    corr = _correlation(x, x, np.exp(log_length_scales))
    factor, nugget = _factorize(corr, min_nugget, max_nugget)
    if factor is None:
        return None

    n = y.shape[0]
    ones = np.ones(n)
    r_inv_ones = linalg.cho_solve(factor, ones)
    trend = float(ones @ linalg.cho_solve(factor, y)) / float(ones @ r_inv_ones)
    residual = y - trend
    weights = linalg.cho_solve(factor, residual)
    variance = float(np.clip(residual @ weights / n, *VARIANCE_BOUNDS))
    log_det = 2.0 * np.sum(np.log(np.diag(factor[0])))
    nll = 0.5 * (n * np.log(variance) + log_det + float(residual @ weights) / variance)
    if not np.isfinite(nll):
        return None

    gradient = None
    if with_gradient:
        # d nll / d log(l_k) = (tr(R^-1 dR) - w' dR w / variance) / 2
        r_inv = linalg.cho_solve(factor, np.eye(n))
        length_scales = np.exp(log_length_scales)
        gradient = np.empty(length_scales.shape[0])
        for k, length_scale in enumerate(length_scales):
            d_corr = corr * (x[:, k, None] - x[None, :, k]) ** 2 / length_scale ** 2
            gradient[k] = 0.5 * (np.sum(r_inv * d_corr) - float(weights @ d_corr @ weights) / variance)
    return _Profile(nll, factor, nugget, trend, variance, weights, gradient)


class GpSurrogate:
    """Fitted Gaussian process; immutable and safe to share read-only."""

    def __init__(
        self,
        design: DesignSet,
        log_length_scales: np.ndarray,
        profile: Optional[_Profile],
        x_center: np.ndarray,
        x_scale: np.ndarray,
        y_center: float,
        y_scale: float,
    ):
        self.design = design
        self.log_length_scales = np.asarray(log_length_scales, dtype=float)
        self.x_center = x_center
        self.x_scale = x_scale
        self.y_center = y_center
        self.y_scale = y_scale
        self.degenerate = profile is None
        if profile is None:
            self.nugget = 0.0
            self._trend = 0.0
            self._variance = 0.0
            self._factor = None
            self._weights = None
        else:
            self.nugget = profile.nugget
            self._trend = profile.trend
            self._variance = profile.variance
            self._factor = profile.factor
            self._weights = profile.weights
        self._train = (design.inputs - x_center) / x_scale

    @property
    def dimension(self) -> int:
        return self.design.dimension

    @property
    def length_scales(self) -> np.ndarray:
        """Length-scales in standardized input units."""
        return np.exp(self.log_length_scales)

    @property
    def trend(self) -> float:
        """Constant mean in output units."""
        return self.y_center + self.y_scale * self._trend

    @property
    def process_variance(self) -> float:
        """Prior variance in output units."""
        return self.y_scale ** 2 * self._variance

    @property
    def output_scale(self) -> float:
        return self.y_scale

    def predict(self, points: np.ndarray, chunk_size: Optional[int] = None) -> Prediction:
        """Posterior mean and standard deviation at the given points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dimension:
            raise DimensionMismatch(f"surrogate is {self.dimension}-D, points are {points.shape[1]}-D")

        count = points.shape[0]
        if self.degenerate:
            return Prediction(np.full(count, self.y_center), np.zeros(count))

        chunk = chunk_size or count or 1
        mean = np.empty(count)
        std = np.empty(count)
        length_scales = self.length_scales
        lower = self._factor[0]
        for start in range(0, count, chunk):
            stop = min(start + chunk, count)
            scaled = (points[start:stop] - self.x_center) / self.x_scale
            corr = _correlation(scaled, self._train, length_scales)
            mean[start:stop] = self._trend + corr @ self._weights
            solved = linalg.solve_triangular(lower, corr.T, lower=True)
            reduction = np.sum(solved ** 2, axis=0)
            std[start:stop] = np.sqrt(self._variance * np.clip(1.0 - reduction, 0.0, None))

        return Prediction(self.y_center + self.y_scale * mean, self.y_scale * std)

    def three_fold_predict(self, points: np.ndarray, kbar: float,
                           chunk_size: Optional[int] = None) -> ThreeFoldOutputs:
        """Outputs of the mean -/+ kbar*std metamodels."""
        if kbar <= 0:
            raise DomainError("kbar must be positive")
        prediction = self.predict(points, chunk_size=chunk_size)
        return three_fold_from_prediction(prediction, kbar)

    def kernel_params(self) -> dict:
        return {
            "length_scales": self.length_scales.tolist(),
            "process_variance": self.process_variance,
            "trend": self.trend,
            "nugget": self.nugget,
        }


def three_fold_from_prediction(prediction: Prediction, kbar: float) -> ThreeFoldOutputs:
    """Plus fold lies below the mean, minus fold above it."""
    band = kbar * prediction.std
    return ThreeFoldOutputs(prediction.mean - band, prediction.mean, prediction.mean + band)


def fit_surrogate(design: DesignSet, options: Optional[FitOptions] = None) -> GpSurrogate:
    """Fit hyperparameters by multi-start bounded likelihood maximization."""
    options = options or FitOptions()
    x_center, x_scale = _input_scale(design.inputs)
    x = (design.inputs - x_center) / x_scale
    y_center = float(design.outputs.mean())
    y_scale = float(design.outputs.std())
    dim = design.dimension

    if y_scale == 0.0:
        warnings.warn("all design outputs are equal; returning the constant surrogate",
                      DegenerateOutputsWarning)
        logger.warning(f"Degenerate outputs in design of size {design.size}")
        return GpSurrogate(design, np.zeros(dim), None, x_center, x_scale, y_center, 1.0)

    y = (design.outputs - y_center) / y_scale
    log_bounds = [(np.log(LENGTH_SCALE_BOUNDS[0]), np.log(LENGTH_SCALE_BOUNDS[1]))] * dim

    # searched targets are unchanged by a constant output shift
    search_y = np.round(y, SEARCH_DECIMALS)

    def objective(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        result = _profile(x, search_y, theta, options.min_nugget, options.max_nugget, with_gradient=True)
        if result is None:
            return _FAILED_LIKELIHOOD, np.zeros(dim)
        return result.neg_log_likelihood, result.gradient

    rng = derive_rng(options.seed, STREAM_OPTIMIZER, options.iteration)
    starts = [np.asarray(options.warm_start, dtype=float) if options.warm_start is not None
              else np.zeros(dim)]
    low, high = log_bounds[0]
    starts.extend(rng.uniform(low, high, size=(options.starts - 1, dim)))

    best_theta, best_value = None, np.inf
    for start in starts:
        start = np.clip(start, low, high)
        result = optimize.minimize(objective, start, method="L-BFGS-B", jac=True,
                                   bounds=log_bounds, options=OPTIMIZER_OPTIONS)
        if result.fun < best_value:
            best_theta, best_value = result.x, float(result.fun)

    profile = _profile(x, y, best_theta, options.min_nugget, options.max_nugget)
    if profile is None:
        raise SingularCovariance(
            f"covariance of {design.size} points not positive definite at nugget {options.max_nugget}"
        )
    if profile.nugget > options.min_nugget:
        logger.warning(f"Nugget escalated to {profile.nugget:.1e} for design of size {design.size}")

    logger.debug(f"Fitted GP on {design.size} points: length scales {np.exp(best_theta)}")
    return GpSurrogate(design, best_theta, profile, x_center, x_scale, y_center, y_scale)
