"""Global active learning of the output distribution function."""

import logging
import time
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, stats

from app.exceptions import EmptyPool
from app.models.learning import (
    AlConfig,
    IterationRecord,
    LearningMode,
    RunReport,
    TailMode,
    TerminationReason,
)
from app.models.sampling import RandomInputSpec
from app.services.benchmarks import ModelFunction
from app.services.distribution_estimate import (
    PoolPrediction,
    ThreeFoldCdf,
    fold_moments,
    predict_pool,
    tail_denominator,
)
from app.services.gp_surrogate import DesignSet, FitOptions, GpSurrogate, fit_surrogate
from app.services.sampling import initial_design, sample_pool, std_normal_cdf

logger = logging.getLogger(__name__)

GRID_NODES = 1001
KERNEL_HALF_WIDTH = 8.0
KERNEL_LOCAL_NODES = 161
ZERO_STD_FACTOR = 1e-12

WFunction = Callable[[np.ndarray], np.ndarray]


class CandidateChoice(NamedTuple):
    """Index of the selected pool candidate and whether the band was empty."""
    index: int
    band_fallback: bool


def _floor(cdf: ThreeFoldCdf, floor: Optional[float]) -> float:
    return floor if floor is not None else 1.0 / cdf.size


def integration_grid(y_min: float, y_max: float, nodes: int = GRID_NODES) -> np.ndarray:
    return np.linspace(y_min, y_max, nodes)


def w_star(cdf: ThreeFoldCdf, y, tail_mode: TailMode = TailMode.BOTH, floor: Optional[float] = None):
    """Tail-weighted gap |F+ - F-| / min[F0, 1 - F0] (or a single tail)."""
    plus, mid, minus = cdf.evaluate(y)
    return np.abs(plus - minus) / tail_denominator(mid, tail_mode, _floor(cdf, floor))


def global_error(cdf: ThreeFoldCdf, config: AlConfig, floor: Optional[float] = None) -> float:
    """Integral of w* over [y_min, y_max]."""
    grid = integration_grid(config.y_min, config.y_max)
    values = w_star(cdf, grid, config.tail_mode, floor)
    return float(integrate.trapezoid(values, grid))


def wasserstein_gap(cdf: ThreeFoldCdf, y_min: Optional[float] = None, y_max: Optional[float] = None) -> float:
    """Unweighted int |F+ - F-| dy, over [y_min, y_max] or the whole line."""
    if y_min is None or y_max is None:
        return float(stats.wasserstein_distance(cdf.plus.samples, cdf.minus.samples))
    grid = integration_grid(y_min, y_max)
    plus, _, minus = cdf.evaluate(grid)
    return float(integrate.trapezoid(np.abs(plus - minus), grid))


def stopping_check(total_error: float, config: AlConfig) -> bool:
    return total_error < config.tolerance


def kernel_smoothed_error(w_fn: WFunction, y_prime: float, sigma: float,
                          y_min: float, y_max: float) -> float:
    """Gaussian-kernel average of w* around y', kernel truncated to the range."""
    if sigma <= ZERO_STD_FACTOR * (y_max - y_min):
        return float(w_fn(np.asarray([y_prime]))[0])

    lo = max(y_min, y_prime - KERNEL_HALF_WIDTH * sigma)
    hi = min(y_max, y_prime + KERNEL_HALF_WIDTH * sigma)
    grid = integration_grid(y_min, y_max)
    local = y_prime + sigma * np.linspace(-KERNEL_HALF_WIDTH, KERNEL_HALF_WIDTH, KERNEL_LOCAL_NODES)
    nodes = np.union1d(np.union1d(grid[(grid >= lo) & (grid <= hi)], np.clip(local, lo, hi)), [lo, hi])

    weights = np.exp(-0.5 * ((nodes - y_prime) / sigma) ** 2)
    normalizer = np.sqrt(2.0 * np.pi) * sigma * (
        std_normal_cdf((y_max - y_prime) / sigma) - std_normal_cdf((y_min - y_prime) / sigma)
    )
    return float(integrate.trapezoid(w_fn(nodes) * weights, nodes)) / normalizer


def maximize_localized_error(
    w_fn: WFunction,
    y_min: float,
    y_max: float,
    sigma_fn: Optional[Callable[[float], float]] = None,
    nodes: int = GRID_NODES,
) -> float:
    """
    Maximize the localized error over [y_min, y_max].

    Scans a uniform grid, keeps the first best node, then refines with a
    bounded scalar search inside the two neighbouring cells. A refined point
    replaces the node only when strictly better. sigma_fn=None means the
    Dirac kernel (the localized error is w* itself).
    """
    grid = integration_grid(y_min, y_max, nodes)
    if sigma_fn is None:
        def localized(y: float) -> float:
            return float(w_fn(np.asarray([y]))[0])
        values = np.asarray(w_fn(grid), dtype=float)
    else:
        def localized(y: float) -> float:
            return kernel_smoothed_error(w_fn, y, float(sigma_fn(y)), y_min, y_max)
        values = np.array([localized(y) for y in grid])

    best = int(np.argmax(values))
    left = grid[max(best - 1, 0)]
    right = grid[min(best + 1, nodes - 1)]
    if right > left:
        refined = optimize.minimize_scalar(lambda y: -localized(y), bounds=(left, right), method="bounded")
        if refined.success and -refined.fun > values[best]:
            return float(refined.x)
    return float(grid[best])


def localized_error(
    cdf: ThreeFoldCdf,
    y_prime: float,
    kernel_mode: LearningMode,
    predictions: PoolPrediction,
    config: AlConfig,
    floor: Optional[float] = None,
) -> float:
    """Localized error W*_L(y') under the Dirac or Gaussian kernel."""
    if predictions.size == 0:
        raise EmptyPool("no pool predictions")

    def w_fn(y):
        return w_star(cdf, y, config.tail_mode, floor)

    if kernel_mode == LearningMode.DIRAC_KERNEL:
        return float(w_fn(np.asarray([y_prime]))[0])
    sigma = float(predictions.sigma_near(y_prime))
    return kernel_smoothed_error(w_fn, y_prime, sigma, config.y_min, config.y_max)


def select_threshold(
    cdf: ThreeFoldCdf,
    predictions: PoolPrediction,
    config: AlConfig,
    kernel_mode: Optional[LearningMode] = None,
    floor: Optional[float] = None,
) -> float:
    """Output threshold y* with the largest localized error."""
    if predictions.size == 0:
        raise EmptyPool("no pool predictions")
    kernel_mode = kernel_mode or config.learning_mode

    def w_fn(y):
        return w_star(cdf, y, config.tail_mode, floor)

    sigma_fn = None if kernel_mode == LearningMode.DIRAC_KERNEL else predictions.sigma_near
    return maximize_localized_error(w_fn, config.y_min, config.y_max, sigma_fn)


def misclassification_score(mean: np.ndarray, std: np.ndarray, y_star: float,
                            output_scale: float) -> np.ndarray:
    """Phi(-|y* - mu| / sigma); zero where sigma vanishes."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    resolved = std <= ZERO_STD_FACTOR * output_scale
    safe_std = np.where(resolved, 1.0, std)
    score = std_normal_cdf(-np.abs(y_star - mean) / safe_std)
    return np.where(resolved, 0.0, score)


def learning_score(points: np.ndarray, y_star: float, surrogate: GpSurrogate) -> np.ndarray:
    """Probability that the surrogate misclassifies points against y*."""
    prediction = surrogate.predict(points)
    return misclassification_score(prediction.mean, prediction.std, y_star, surrogate.output_scale)


def band_mask(predictions: PoolPrediction, config: AlConfig) -> np.ndarray:
    """Candidates whose mean lies in [y_min - k*sigma, y_max + k*sigma]."""
    band = config.kbar * predictions.std
    return (predictions.mean >= config.y_min - band) & (predictions.mean <= config.y_max + band)


def _constrained_argmax(score: np.ndarray, mask: np.ndarray, excluded: Iterable[int]) -> CandidateChoice:
    score = np.asarray(score, dtype=float).copy()
    allowed = mask.copy()
    excluded = list(excluded)
    if len(set(excluded)) >= score.shape[0]:
        raise EmptyPool(f"all {score.shape[0]} candidates are excluded")
    if excluded:
        score[excluded] = -np.inf
        allowed[excluded] = False

    if not allowed.any():
        logger.warning("No candidate inside the output band; using the unconstrained maximum")
        return CandidateChoice(int(np.argmax(score)), True)
    return CandidateChoice(int(np.argmax(np.where(allowed, score, -np.inf))), False)


def select_candidate(predictions: PoolPrediction, y_star: float, config: AlConfig,
                     excluded: Sequence[int] = ()) -> CandidateChoice:
    """Pool candidate maximizing the misclassification score inside the band."""
    if predictions.size == 0:
        raise EmptyPool("no candidates to select from")
    score = misclassification_score(predictions.mean, predictions.std, y_star, predictions.output_scale)
    return _constrained_argmax(score, band_mask(predictions, config), excluded)


def select_candidate_mov(predictions: PoolPrediction, config: AlConfig,
                         excluded: Sequence[int] = ()) -> CandidateChoice:
    """Pool candidate with the largest predictive std inside the band."""
    if predictions.size == 0:
        raise EmptyPool("no candidates to select from")
    return _constrained_argmax(predictions.std, band_mask(predictions, config), excluded)


def midpoint_outward_order(count: int) -> List[int]:
    """Indices 0..count-1 starting at the middle and alternating outward."""
    mid = count // 2
    order = [mid]
    for step in range(1, count):
        for index in (mid + step, mid - step):
            if 0 <= index < count:
                order.append(index)
    return order


def conventional_thresholds(config: AlConfig) -> np.ndarray:
    if config.conventional_thresholds == 1:
        return np.array([0.5 * (config.y_min + config.y_max)])
    return np.linspace(config.y_min, config.y_max, config.conventional_thresholds)


class _LoopState:
    """Surrogate, pool predictions and CDF of the current design."""

    def __init__(self, model: ModelFunction, spec: RandomInputSpec, config: AlConfig):
        self.model = model
        self.spec = spec
        self.config = config
        points = initial_design(spec, config.init_size, config.master_seed, config.design_method)
        self.design = DesignSet(points, model(points))
        self.fits = 0
        self.surrogate: Optional[GpSurrogate] = None
        self.predictions: Optional[PoolPrediction] = None
        self.cdf: Optional[ThreeFoldCdf] = None
        self.pool = None
        self.records: List[IterationRecord] = []
        logger.info(f"Initial design of {self.design.size} points evaluated with {model.name}")

    @property
    def added(self) -> int:
        return len(self.records)

    def refresh(self) -> None:
        """Refit the surrogate and predict on a freshly drawn pool."""
        warm_start = None if self.surrogate is None else self.surrogate.log_length_scales.tolist()
        options = FitOptions(
            starts=self.config.optimizer_starts,
            seed=self.config.master_seed,
            iteration=self.fits,
            warm_start=warm_start,
        )
        self.surrogate = fit_surrogate(self.design, options)
        self.pool = sample_pool(self.spec, self.config.pool_size, self.config.master_seed, generation=self.fits)
        self.predictions = predict_pool(self.surrogate, self.pool, self.config.kbar,
                                        chunk_size=self.config.prediction_chunk_size)
        self.cdf = ThreeFoldCdf.from_outputs(self.predictions.outputs)
        self.fits += 1

    def choose(self, select: Callable[[Sequence[int]], CandidateChoice]) -> CandidateChoice:
        """Apply a selector, skipping candidates already in the design."""
        excluded: List[int] = []
        choice = select(excluded)
        while self.design.contains(self.pool.points[choice.index]):
            if choice.index in excluded:
                raise EmptyPool("no admissible candidate left outside the design")
            excluded.append(choice.index)
            choice = select(excluded)
        return choice

    def evaluate_and_add(self, choice: CandidateChoice, total_error: float, started: float,
                         y_star: Optional[float] = None, threshold_error: Optional[float] = None) -> None:
        point = self.pool.points[choice.index]
        value = float(self.model(point[np.newaxis, :])[0])
        moments = fold_moments(self.predictions.outputs)
        gap = wasserstein_gap(self.cdf, self.config.y_min, self.config.y_max)
        self.design.add(point, value)
        self.records.append(IterationRecord(
            iteration=len(self.records),
            w_star=total_error,
            wasserstein=gap,
            y_star=y_star,
            threshold_w_star=threshold_error,
            candidate_index=choice.index,
            x_star=point.tolist(),
            y_true=value,
            band_fallback=choice.band_fallback,
            moments=moments,
            n_model_calls=self.design.size,
            duration_seconds=time.perf_counter() - started,
        ))

    def report(self, termination: TerminationReason, total_error: float) -> RunReport:
        return RunReport(
            config=self.config,
            benchmark=self.model.name,
            iterations=self.records,
            termination=termination,
            final_w_star=total_error,
            final_moments=fold_moments(self.predictions.outputs),
            initial_size=self.config.init_size,
            n_model_calls=self.design.size,
            added_outputs=[record.y_true for record in self.records],
            final_cdf=self.cdf,
        )


def run_active_loop(model: ModelFunction, spec: RandomInputSpec, config: AlConfig) -> RunReport:
    """
    Global active learning of the CDF/CCDF over [y_min, y_max].

    Each pass fits the surrogate, builds the three-fold CDF on a fresh pool,
    checks the stopping rule and otherwise adds one training sample chosen
    by the configured learning mode.
    """
    if config.learning_mode == LearningMode.CONVENTIONAL:
        return run_conventional_baseline(model, spec, config)

    state = _LoopState(model, spec, config)
    while True:
        started = time.perf_counter()
        state.refresh()
        total_error = global_error(state.cdf, config)
        logger.info(
            f"[{model.name}/{config.learning_mode.value}] iteration {state.added}: "
            f"W*={total_error:.4f} (tolerance {config.tolerance:.4f}), N_M={state.design.size}"
        )

        if stopping_check(total_error, config):
            return state.report(TerminationReason.CONVERGED, total_error)
        if state.added >= config.budget:
            logger.warning(f"Budget of {config.budget} added samples exhausted before convergence")
            return state.report(TerminationReason.BUDGET_EXHAUSTED, total_error)

        if config.learning_mode == LearningMode.MAX_OF_VARIANCE:
            y_star = None
            choice = state.choose(lambda excluded: select_candidate_mov(state.predictions, config, excluded))
        else:
            y_star = select_threshold(state.cdf, state.predictions, config)
            choice = state.choose(lambda excluded: select_candidate(state.predictions, y_star, config, excluded))
        state.evaluate_and_add(choice, total_error, started, y_star=y_star)
        threshold = "-" if y_star is None else f"{y_star:.4g}"
        logger.info(f"[{model.name}/{config.learning_mode.value}] y*={threshold}, "
                    f"added candidate {choice.index} with y={state.records[-1].y_true:.4g}")


def run_conventional_baseline(model: ModelFunction, spec: RandomInputSpec, config: AlConfig) -> RunReport:
    """
    Threshold-by-threshold learning with a shared, growing design.

    Thresholds are visited from the middle of the range outward, alternating
    toward both tails. At each threshold samples are added until
    w*(y) < eps_bar; the surrogate is refitted only after the design changes.
    """
    state = _LoopState(model, spec, config)
    thresholds = conventional_thresholds(config)
    state.refresh()
    stale = False

    for index in midpoint_outward_order(len(thresholds)):
        threshold = float(thresholds[index])
        while True:
            started = time.perf_counter()
            if stale:
                state.refresh()
                stale = False
            local_error = float(w_star(state.cdf, np.asarray([threshold]), config.tail_mode)[0])
            if local_error < config.eps_bar:
                break
            total_error = global_error(state.cdf, config)
            if state.added >= config.budget:
                logger.warning(f"Budget of {config.budget} added samples exhausted at threshold {threshold:.4g}")
                return state.report(TerminationReason.BUDGET_EXHAUSTED, total_error)

            choice = state.choose(lambda excluded: select_candidate(state.predictions, threshold, config, excluded))
            state.evaluate_and_add(choice, total_error, started, y_star=threshold, threshold_error=local_error)
            stale = True
            logger.info(
                f"[{model.name}/conventional] threshold {threshold:.4g}: w*={local_error:.4f}, "
                f"N_M={state.design.size}"
            )

    total_error = global_error(state.cdf, config)
    return state.report(TerminationReason.CONVERGED, total_error)
