"""Three-fold CDF estimates, moments and validation errors from distribution functions."""

import logging
import warnings
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import integrate, stats

from app.exceptions import DegenerateSample, DomainError, EmptyPool, RangeTooNarrowWarning
from app.models.learning import FoldMoments, MomentSet, TailMode
from app.models.sampling import CandidatePool
from app.services.gp_surrogate import GpSurrogate, Prediction, ThreeFoldOutputs, three_fold_from_prediction

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

MOMENT_NODES = 4000
MASS_TOLERANCE = 1e-6
EPSILON_E_INTERVALS = 100
CSV_FORMAT = "%.17g"


class EmpiricalCdf:
    """Right-continuous step CDF of a sample, evaluated by binary search."""

    def __init__(self, samples: np.ndarray, presorted: bool = False):
        samples = np.asarray(samples, dtype=float).ravel()
        if samples.size == 0:
            raise EmptyPool("empirical CDF needs at least one sample")
        self.samples = samples if presorted else np.sort(samples)
        self.samples.setflags(write=False)

    @property
    def size(self) -> int:
        return self.samples.shape[0]

    def __call__(self, y: ArrayLike) -> ArrayLike:
        counts = np.searchsorted(self.samples, y, side="right")
        return counts / self.size

    def default_range(self) -> Tuple[float, float]:
        """Sample range padded by three standard deviations."""
        spread = 3.0 * float(self.samples.std())
        return float(self.samples[0]) - spread, float(self.samples[-1]) + spread


class TabulatedCdf:
    """CDF given by (y, F) rows, linearly interpolated and clamped to [0, 1]."""

    def __init__(self, y: np.ndarray, values: np.ndarray, samples: Optional[int] = None):
        self.y = np.asarray(y, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.samples = samples

    def __call__(self, y: ArrayLike) -> ArrayLike:
        return np.interp(y, self.y, self.values, left=0.0, right=1.0)


class ThreeFoldCdf:
    """Consistent CDF triple over one common population."""

    def __init__(self, plus: EmpiricalCdf, mid: EmpiricalCdf, minus: EmpiricalCdf):
        if not plus.size == mid.size == minus.size:
            raise DomainError("three folds must share the same population")
        self.plus = plus
        self.mid = mid
        self.minus = minus

    @classmethod
    def from_outputs(cls, outputs: ThreeFoldOutputs) -> "ThreeFoldCdf":
        return cls(EmpiricalCdf(outputs.plus), EmpiricalCdf(outputs.mid), EmpiricalCdf(outputs.minus))

    @property
    def size(self) -> int:
        return self.mid.size

    def evaluate(self, y: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
        """Return (F+, F0, F-) at y."""
        return self.plus(y), self.mid(y), self.minus(y)

    def negated(self) -> "ThreeFoldCdf":
        """Folds of -Y; the fold roles swap so that F+ >= F0 >= F- still holds."""
        return ThreeFoldCdf(
            EmpiricalCdf(-self.minus.samples[::-1], presorted=True),
            EmpiricalCdf(-self.mid.samples[::-1], presorted=True),
            EmpiricalCdf(-self.plus.samples[::-1], presorted=True),
        )


class PoolPrediction:
    """Surrogate predictions over a candidate pool, cached for one iteration."""

    def __init__(self, prediction: Prediction, kbar: float, output_scale: float):
        self.mean = prediction.mean
        self.std = prediction.std
        self.kbar = kbar
        self.output_scale = output_scale
        self.outputs = three_fold_from_prediction(prediction, kbar)
        order = np.argsort(self.mean, kind="stable")
        self._sorted_mean = self.mean[order]
        self._sorted_std = self.std[order]

    @property
    def size(self) -> int:
        return self.mean.shape[0]

    def sigma_near(self, y: ArrayLike) -> ArrayLike:
        """Predictive std of the candidate whose mean output is nearest to y."""
        if self.size == 0:
            raise EmptyPool("no pool predictions")
        y = np.asarray(y, dtype=float)
        right = np.clip(np.searchsorted(self._sorted_mean, y), 0, self.size - 1)
        left = np.clip(right - 1, 0, self.size - 1)
        take_left = np.abs(y - self._sorted_mean[left]) <= np.abs(self._sorted_mean[right] - y)
        nearest = np.where(take_left, left, right)
        return self._sorted_std[nearest]


def predict_pool(surrogate: GpSurrogate, pool: CandidatePool, kbar: float,
                 chunk_size: Optional[int] = None) -> PoolPrediction:
    prediction = surrogate.predict(pool.points, chunk_size=chunk_size)
    return PoolPrediction(prediction, kbar, surrogate.output_scale)


def estimate_three_fold_cdf(surrogate: GpSurrogate, pool: CandidatePool, kbar: float,
                            chunk_size: Optional[int] = None) -> ThreeFoldCdf:
    """Three-fold CDF from common random numbers."""
    if kbar <= 0:
        raise DomainError("kbar must be positive")
    return ThreeFoldCdf.from_outputs(predict_pool(surrogate, pool, kbar, chunk_size).outputs)


def ccdf(cdf_value: ArrayLike) -> ArrayLike:
    """Complementary CDF value 1 - F."""
    values = np.asarray(cdf_value, dtype=float)
    if np.any((values < 0.0) | (values > 1.0)):
        raise DomainError("CDF values must lie in [0, 1]")
    return 1.0 - cdf_value


def _moments_from_raw(m1: float, m2: float, m3: float, m4: float) -> MomentSet:
    variance = max(m2 - m1 ** 2, 0.0)
    std = float(np.sqrt(variance))
    if std == 0.0:
        return MomentSet(mean=m1, std=0.0, skewness=0.0, kurtosis=0.0)
    central3 = m3 - 3.0 * m1 * m2 + 2.0 * m1 ** 3
    central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 ** 2 * m2 - 3.0 * m1 ** 4
    return MomentSet(mean=m1, std=std, skewness=central3 / std ** 3, kurtosis=central4 / variance ** 2)


def moments_from_cdf(
    cdf: Callable[[ArrayLike], ArrayLike],
    lower: Optional[float] = None,
    upper: Optional[float] = None,
    nodes: int = MOMENT_NODES,
) -> MomentSet:
    """
    Mean, std, skewness and kurtosis from a CDF via
    E(Y^j) = j * int_0^inf y^(j-1) (1 - F(y) + (-1)^j F(-y)) dy.

    Args:
        cdf: Vectorized distribution function
        lower: Lower end of the range holding the probability mass
        upper: Upper end of the range; both default to the padded sample
            range when cdf is an EmpiricalCdf

    Returns:
        MomentSet with kurtosis in the non-excess convention
    """
    if lower is None or upper is None:
        if not isinstance(cdf, EmpiricalCdf):
            raise DomainError("an integration range is required for analytic CDFs")
        auto_lower, auto_upper = cdf.default_range()
        lower = auto_lower if lower is None else lower
        upper = auto_upper if upper is None else upper
    if not lower < upper:
        raise DomainError(f"integration range [{lower}, {upper}] is empty")

    lower_mass = float(cdf(lower))
    upper_mass = 1.0 - float(cdf(upper))
    if lower_mass > MASS_TOLERANCE or upper_mass > MASS_TOLERANCE:
        warnings.warn(
            f"range [{lower}, {upper}] misses probability mass ({lower_mass:.2e} below, {upper_mass:.2e} above)",
            RangeTooNarrowWarning,
        )
        logger.warning(f"Moment integration range [{lower}, {upper}] too narrow")

    extent = max(abs(lower), abs(upper))
    y = np.linspace(0.0, extent, nodes)
    upper_tail = 1.0 - cdf(y)
    lower_tail = cdf(-y)

    raw = []
    for order in range(1, 5):
        integrand = y ** (order - 1) * (upper_tail + (-1) ** order * lower_tail)
        raw.append(order * float(integrate.trapezoid(integrand, y)))
    return _moments_from_raw(*raw)


def sample_moments(values: np.ndarray) -> MomentSet:
    """Population-convention sample moments."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size < 2 or np.all(values == values[0]):
        raise DegenerateSample("sample moments need at least two distinct values")
    return MomentSet(
        mean=float(values.mean()),
        std=float(values.std()),
        skewness=float(stats.skew(values, bias=True)),
        kurtosis=float(stats.kurtosis(values, fisher=False, bias=True)),
    )


def _moments_or_point_mass(values: np.ndarray) -> MomentSet:
    try:
        return sample_moments(values)
    except DegenerateSample:
        return MomentSet(mean=float(values[0]), std=0.0, skewness=0.0, kurtosis=0.0)


def fold_moments(outputs: ThreeFoldOutputs) -> FoldMoments:
    """Sample moments of each fold's outputs."""
    return FoldMoments(
        plus=_moments_or_point_mass(outputs.plus),
        mid=_moments_or_point_mass(outputs.mid),
        minus=_moments_or_point_mass(outputs.minus),
    )


def tail_denominator(cdf_value: ArrayLike, tail_mode: TailMode, floor: float) -> ArrayLike:
    """Tail weight min[F, 1-F], F or 1-F, floored."""
    if tail_mode == TailMode.CDF_ONLY:
        weight = cdf_value
    elif tail_mode == TailMode.CCDF_ONLY:
        weight = 1.0 - np.asarray(cdf_value)
    else:
        weight = np.minimum(cdf_value, 1.0 - np.asarray(cdf_value))
    return np.maximum(weight, floor)


def epsilon_e(
    estimated: Callable[[ArrayLike], ArrayLike],
    reference: Callable[[ArrayLike], ArrayLike],
    y_min: float,
    y_max: float,
    tail_mode: TailMode = TailMode.BOTH,
    reference_size: Optional[int] = None,
    intervals: int = EPSILON_E_INTERVALS,
) -> float:
    """Average tail-weighted relative error of an estimated CDF over [y_min, y_max]."""
    if not y_min < y_max:
        raise DomainError("range must satisfy y_min < y_max")
    floor = 1.0 / reference_size if reference_size else np.finfo(float).tiny
    grid = np.linspace(y_min, y_max, intervals + 1)
    reference_values = reference(grid)
    integrand = np.abs(estimated(grid) - reference_values) / tail_denominator(reference_values, tail_mode, floor)
    return float(integrate.trapezoid(integrand, grid)) / (y_max - y_min)


def save_cdf_csv(path: Union[str, Path], y: np.ndarray, values: np.ndarray) -> Path:
    """Write a `y,F` table with full double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack([y, values]), delimiter=",", header="y,F", comments="", fmt=CSV_FORMAT)
    return path


def load_cdf_csv(path: Union[str, Path], samples: Optional[int] = None) -> TabulatedCdf:
    """Read a `y,F` table written by save_cdf_csv."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != 2 or np.any(np.diff(table[:, 0]) < 0):
        raise DomainError(f"{path} is not an ascending y,F table")
    return TabulatedCdf(table[:, 0], table[:, 1], samples=samples)


def save_three_fold_csv(path: Union[str, Path], cdf: ThreeFoldCdf, grid: np.ndarray) -> Path:
    """Write `y,F_minus,F_mid,F_plus` on an ascending grid."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = np.sort(np.asarray(grid, dtype=float))
    plus, mid, minus = cdf.evaluate(grid)
    np.savetxt(path, np.column_stack([grid, minus, mid, plus]), delimiter=",",
               header="y,F_minus,F_mid,F_plus", comments="", fmt=CSV_FORMAT)
    return path
