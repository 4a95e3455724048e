"""Experiment orchestration: reference solutions, repeated runs and aggregate tables."""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from app.config import Settings, get_settings
from app.exceptions import DistributionLearningError, ReferenceUnavailable
from app.models.experiment import (
    AggregateReport,
    ExperimentConfig,
    MethodSummary,
    MomentSummary,
    OutputHistogram,
    ReferenceInfo,
    RunManifestEntry,
    RunStatus,
    StatisticSummary,
)
from app.models.learning import LearningMode, MomentSet, TailMode
from app.services.active_learning import integration_grid, run_active_loop
from app.services.benchmarks import get_benchmark, get_preset, toy_exact_cdf
from app.services.distribution_estimate import (
    EmpiricalCdf,
    epsilon_e,
    load_cdf_csv,
    moments_from_cdf,
    sample_moments,
    save_cdf_csv,
    save_three_fold_csv,
)
from app.services.sampling import sample_pool

logger = logging.getLogger(__name__)

REFERENCE_SAMPLE_NODES = 4001
RANGE_NODES = 101
HISTOGRAM_BINS = 20
MC_CHUNK_SIZE = 1_000_000
TOY_REFERENCE_EXTENT = 15.0


class ReferenceSolution(NamedTuple):
    """Validation CDF plus its provenance."""
    cdf: Callable
    info: ReferenceInfo

    @property
    def floor_samples(self) -> Optional[int]:
        return None if self.info.exact else self.info.samples


class RunTask(NamedTuple):
    """Everything a worker process needs to execute one run."""
    config: ExperimentConfig
    mode: LearningMode
    run_index: int
    y_min: float
    y_max: float
    tail_mode: TailMode
    reference: ReferenceSolution
    settings: Settings


class RunOutcome(NamedTuple):
    entry: RunManifestEntry
    moments: Optional[MomentSet] = None
    added_outputs: Tuple[float, ...] = ()
    added_samples: int = 0


# ---------------------------------------------------------------- references


def reference_cache_path(reference_dir, benchmark: str, samples: int, seed: int) -> Path:
    if benchmark == "toy":
        return Path(reference_dir) / "toy_exact.csv"
    return Path(reference_dir) / f"{benchmark}_n{samples}_s{seed}.csv"


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _moment_dict(moments: MomentSet) -> dict:
    return moments.model_dump()


def _reference_chunk(benchmark: str, seed: int, generation: int, size: int) -> np.ndarray:
    """Outputs of one Monte Carlo chunk; chunk seeds make results independent of the worker count."""
    model = get_benchmark(benchmark)
    pool = sample_pool(model.input_spec, size, seed, generation=generation)
    return model(pool.points)


def _chunk_sizes(total: int, chunk: int) -> List[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def generate_reference(
    benchmark: str,
    samples: int,
    seed: int,
    reference_dir=None,
    workers: int = 1,
    settings: Optional[Settings] = None,
) -> ReferenceInfo:
    """
    Write the reference CDF table for a benchmark.

    The toy benchmark gets its exact CDF; the others a crude Monte Carlo
    estimate. Files are cached by (benchmark, samples, seed) and an existing
    table is returned as is.

    Returns:
        ReferenceInfo describing the written (or cached) table
    """
    settings = settings or get_settings()
    preset = get_preset(benchmark)
    path = reference_cache_path(reference_dir or settings.reference_dir, benchmark, samples, seed)
    sidecar = _sidecar(path)
    if path.exists() and sidecar.exists():
        logger.info(f"Using cached reference {path}")
        return ReferenceInfo.model_validate_json(sidecar.read_text())

    if benchmark == "toy":
        grid = np.union1d(
            np.linspace(-TOY_REFERENCE_EXTENT, TOY_REFERENCE_EXTENT, REFERENCE_SAMPLE_NODES),
            np.linspace(preset.y_min, preset.y_max, RANGE_NODES),
        )
        save_cdf_csv(path, grid, toy_exact_cdf(grid))
        moments = moments_from_cdf(toy_exact_cdf, -TOY_REFERENCE_EXTENT, TOY_REFERENCE_EXTENT)
        info = ReferenceInfo(benchmark=benchmark, path=str(path), samples=0, exact=True,
                             moments=_moment_dict(moments))
    else:
        chunk = settings.bouc_wen_batch_size if benchmark == "bouc_wen" else MC_CHUNK_SIZE
        sizes = _chunk_sizes(samples, chunk)
        logger.info(f"Generating {benchmark} reference: {samples} samples in {len(sizes)} chunks, {workers} worker(s)")
        args = ([benchmark] * len(sizes), [seed] * len(sizes), list(range(len(sizes))), sizes)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as executor:
                outputs = np.concatenate(list(executor.map(_reference_chunk, *args)))
        else:
            outputs = np.concatenate([_reference_chunk(*row) for row in zip(*args)])

        cdf = EmpiricalCdf(outputs)
        grid = np.union1d(
            np.linspace(cdf.samples[0], cdf.samples[-1], REFERENCE_SAMPLE_NODES),
            np.linspace(preset.y_min, preset.y_max, RANGE_NODES),
        )
        save_cdf_csv(path, grid, cdf(grid))
        info = ReferenceInfo(benchmark=benchmark, path=str(path), seed=seed, samples=samples,
                             moments=_moment_dict(sample_moments(outputs)))

    sidecar.write_text(info.model_dump_json(indent=2))
    logger.info(f"Reference for {benchmark} written to {path}")
    return info


def load_reference(path, benchmark: str) -> ReferenceSolution:
    """Load a reference table, reading sample count from its sidecar when present."""
    path = Path(path)
    if not path.exists():
        raise ReferenceUnavailable(f"reference file {path} not found")
    sidecar = _sidecar(path)
    if sidecar.exists():
        info = ReferenceInfo.model_validate_json(sidecar.read_text())
        if info.benchmark == "toy" and info.exact:
            return ReferenceSolution(toy_exact_cdf, info)
    else:
        logger.warning(f"No sidecar for {path}; using the smallest positive tail floor")
        info = ReferenceInfo(benchmark=benchmark, path=str(path), samples=0)
    try:
        table = load_cdf_csv(path, samples=info.samples or None)
    except (OSError, ValueError, DistributionLearningError) as e:
        raise ReferenceUnavailable(f"cannot read reference {path}: {e}") from e
    return ReferenceSolution(table, info)


# ---------------------------------------------------------------- runs


def run_paths(output_dir, benchmark: str, mode: LearningMode, run_index: int) -> Tuple[Path, Path]:
    folder = Path(output_dir) / benchmark / mode.value
    return folder / f"run_{run_index:03d}.json", folder / f"run_{run_index:03d}_cdf.csv"


def _execute_run(task: RunTask) -> RunOutcome:
    """Execute one learning run and write its report and final CDF."""
    config, settings = task.config, task.settings
    seed = config.run_seed(task.run_index)
    report_path, cdf_path = run_paths(config.output_dir, config.benchmark, task.mode, task.run_index)
    try:
        model = get_benchmark(config.benchmark)
        al_config = config.al_config(
            task.mode, task.run_index, task.y_min, task.y_max, task.tail_mode,
            optimizer_starts=settings.optimizer_starts,
            prediction_chunk_size=settings.prediction_chunk_size,
        )
        report = run_active_loop(model, model.input_spec, al_config)

        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(report.to_json(include_timings=settings.include_timings))
        save_three_fold_csv(cdf_path, report.final_cdf, integration_grid(task.y_min, task.y_max))
        error = epsilon_e(report.final_cdf.mid, task.reference.cdf, task.y_min, task.y_max,
                          task.tail_mode, reference_size=task.reference.floor_samples)

        logger.info(
            f"[{config.benchmark}/{task.mode.value}] run {task.run_index} finished: "
            f"eps_e={error:.4f}, N_M={report.n_model_calls}, {report.termination.value}"
        )
        entry = RunManifestEntry(
            mode=task.mode, run_index=task.run_index, seed=seed, status=RunStatus.COMPLETED,
            report_path=str(report_path), cdf_path=str(cdf_path), eps_e=error,
            n_model_calls=report.n_model_calls,
        )
        return RunOutcome(entry, report.final_moments.mid, tuple(report.added_outputs), report.added_samples)

    except Exception as e:
        logger.error(f"[{config.benchmark}/{task.mode.value}] run {task.run_index} failed: {e}", exc_info=True)
        entry = RunManifestEntry(mode=task.mode, run_index=task.run_index, seed=seed,
                                 status=RunStatus.FAILED, error=f"{type(e).__name__}: {e}")
        return RunOutcome(entry)


def _statistic(values: np.ndarray) -> StatisticSummary:
    mean = float(np.mean(values))
    std = float(np.std(values))
    if mean == 0.0:
        return StatisticSummary(mean=mean, abs_cov=0.0 if std == 0.0 else None)
    return StatisticSummary(mean=mean, abs_cov=std / abs(mean))


def summarize_method(mode: LearningMode, outcomes: List[RunOutcome], y_min: float, y_max: float) -> MethodSummary:
    """Cross-run statistics of one learning mode over its completed runs."""
    completed = [o for o in outcomes if o.entry.status == RunStatus.COMPLETED]
    summary = MethodSummary(mode=mode, runs_completed=len(completed), runs_failed=len(outcomes) - len(completed))
    if not completed:
        return summary

    errors = np.array([o.entry.eps_e for o in completed])
    summary.mean_eps_e = float(np.mean(errors))
    summary.std_eps_e = float(np.std(errors))
    summary.mean_model_calls = float(np.mean([o.entry.n_model_calls for o in completed]))
    summary.mean_added_samples = float(np.mean([o.added_samples for o in completed]))
    summary.moments = MomentSummary(**{
        name: _statistic(np.array([getattr(o.moments, name) for o in completed]))
        for name in ("mean", "std", "skewness", "kurtosis")
    })

    added = np.concatenate([np.asarray(o.added_outputs, dtype=float) for o in completed])
    counts, edges = np.histogram(added, bins=HISTOGRAM_BINS, range=(y_min, y_max))
    summary.training_outputs = OutputHistogram(edges=edges.tolist(), counts=counts.tolist())
    return summary


def format_table(aggregate: AggregateReport) -> str:
    """Human-readable error, call-count and moment tables."""
    lines = [
        f"Benchmark: {aggregate.benchmark}  range [{aggregate.y_min:g}, {aggregate.y_max:g}]  "
        f"tail: {aggregate.tail_mode.value}  runs: {aggregate.config.runs}",
        "",
        f"{'method':<18}{'E[eps_e]':>12}{'sd(eps_e)':>12}{'E[N_M]':>16}",
    ]
    init = aggregate.config.init_size
    for method in aggregate.methods:
        if method.mean_eps_e is None:
            lines.append(f"{method.mode.value:<18}{'failed':>12}")
            continue
        calls = f"{init}+{method.mean_added_samples:.2f}"
        lines.append(f"{method.mode.value:<18}{method.mean_eps_e:>12.4f}{method.std_eps_e:>12.4f}{calls:>16}")

    lines += ["", f"{'method':<18}{'mean':>18}{'std':>18}{'skewness':>18}{'kurtosis':>18}"]
    if aggregate.reference.moments:
        ref = aggregate.reference.moments
        label = "exact" if aggregate.reference.exact else "reference"
        lines.append(f"{label:<18}" + "".join(f"{ref[k]:>18.4f}" for k in ("mean", "std", "skewness", "kurtosis")))
    for method in aggregate.methods:
        if method.moments is None:
            continue
        cells = []
        for name in ("mean", "std", "skewness", "kurtosis"):
            stat = getattr(method.moments, name)
            cov = "n/a" if stat.abs_cov is None else f"{stat.abs_cov:.3f}"
            cells.append(f"{stat.mean:.4f} ({cov})".rjust(18))
        lines.append(f"{method.mode.value:<18}" + "".join(cells))

    if aggregate.partial:
        lines += ["", "WARNING: some runs failed; see the manifest in aggregate.json"]
    return "\n".join(lines) + "\n"


class ExperimentService:
    """Runs repeated learning experiments and writes their outputs."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def resolve_range(self, config: ExperimentConfig) -> Tuple[float, float, TailMode]:
        """Explicit range and tail mode, falling back to the benchmark preset."""
        preset = get_preset(config.benchmark)
        y_min = preset.y_min if config.y_min is None else config.y_min
        y_max = preset.y_max if config.y_max is None else config.y_max
        tail_mode = config.tail_mode or preset.tail_mode
        if not y_min < y_max:
            raise ValueError(f"range must satisfy y_min < y_max, got [{y_min}, {y_max}]")
        return y_min, y_max, tail_mode

    def default_reference_samples(self, benchmark: str) -> int:
        if benchmark == "bouc_wen":
            return self.settings.bouc_wen_reference_samples
        return self.settings.ishigami_reference_samples

    def reference_for(self, config: ExperimentConfig) -> ReferenceSolution:
        """Reference CDF from an explicit path, a regeneration request or the cache."""
        if config.reference_path and not config.regen_reference:
            return load_reference(config.reference_path, config.benchmark)

        samples = config.regen_reference or self.default_reference_samples(config.benchmark)
        try:
            info = generate_reference(config.benchmark, samples, self.settings.reference_seed,
                                      reference_dir=self.settings.reference_dir,
                                      workers=config.workers, settings=self.settings)
        except DistributionLearningError:
            raise
        except Exception as e:
            raise ReferenceUnavailable(f"could not generate the {config.benchmark} reference: {e}") from e
        return load_reference(info.path, config.benchmark)

    def run_experiment(self, config: ExperimentConfig) -> AggregateReport:
        """
        Execute every (mode, run) pair, validate against the reference and aggregate.

        A failed run is logged and recorded in the manifest; the aggregate
        is then flagged partial instead of aborting the experiment.
        """
        y_min, y_max, tail_mode = self.resolve_range(config)
        reference = self.reference_for(config)
        logger.info(
            f"Experiment on {config.benchmark}: modes {[m.value for m in config.modes]}, "
            f"{config.runs} runs, range [{y_min}, {y_max}], tail {tail_mode.value}"
        )

        tasks = [
            RunTask(config, mode, run_index, y_min, y_max, tail_mode, reference, self.settings)
            for mode in config.modes
            for run_index in range(config.runs)
        ]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as executor:
                outcomes = list(executor.map(_execute_run, tasks))
        else:
            outcomes = [_execute_run(task) for task in tasks]

        methods = [
            summarize_method(mode, [o for o in outcomes if o.entry.mode == mode], y_min, y_max)
            for mode in config.modes
        ]
        partial = any(o.entry.status == RunStatus.FAILED for o in outcomes)
        aggregate = AggregateReport(
            benchmark=config.benchmark,
            y_min=y_min,
            y_max=y_max,
            tail_mode=tail_mode,
            config=config,
            reference=reference.info,
            methods=methods,
            manifest=[o.entry for o in outcomes],
            partial=partial,
        )
        self.write_aggregate(aggregate)
        if partial:
            logger.warning(f"Experiment on {config.benchmark} finished with failed runs")
        return aggregate

    @staticmethod
    def aggregate_paths(config: ExperimentConfig) -> Tuple[Path, Path]:
        folder = Path(config.output_dir) / config.benchmark
        return folder / "aggregate.json", folder / "table.txt"

    def write_aggregate(self, aggregate: AggregateReport) -> Path:
        json_path, table_path = self.aggregate_paths(aggregate.config)
        json_path.parent.mkdir(parents=True, exist_ok=True)
        json_path.write_text(aggregate.model_dump_json(indent=2))
        table_path.write_text(format_table(aggregate))
        logger.info(f"Aggregate written to {json_path}")
        return json_path
