"""Command-line runner for distribution learning experiments."""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.config import get_settings
from app.exceptions import DistributionLearningError, UnknownBenchmark
from app.models.experiment import ExperimentConfig
from app.models.learning import LearningMode, TailMode
from app.models.sampling import DesignMethod
from app.services.benchmarks import PRESETS
from app.services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_ERROR = 2
EXIT_PARTIAL = 3

MODE_NAMES = {
    "gaussian": LearningMode.GAUSSIAN_KERNEL,
    "dirac": LearningMode.DIRAC_KERNEL,
    "mov": LearningMode.MAX_OF_VARIANCE,
    "conventional": LearningMode.CONVENTIONAL,
}

TAIL_NAMES = {
    "both": TailMode.BOTH,
    "cdf": TailMode.CDF_ONLY,
    "ccdf": TailMode.CCDF_ONLY,
}


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog="distlearn",
        description="Active-learning GP estimation of CDF/CCDF on benchmark models",
    )
    parser.add_argument("--benchmark", required=True, help=f"one of {sorted(PRESETS)}")
    parser.add_argument("--mode", action="append", choices=sorted(MODE_NAMES),
                        help="learning mode; repeat to compare several (default: gaussian)")
    parser.add_argument("--tail", choices=sorted(TAIL_NAMES), help="error weighting (default: benchmark preset)")
    parser.add_argument("--ymin", type=float, help="lower end of the range of interest")
    parser.add_argument("--ymax", type=float, help="upper end of the range of interest")
    parser.add_argument("--eps-bar", type=float, default=settings.eps_bar, help="relative stopping tolerance")
    parser.add_argument("--kbar", type=float, default=settings.kbar, help="three-fold band factor")
    parser.add_argument("--pool-size", type=int, default=settings.pool_size, help="Monte Carlo pool size N")
    parser.add_argument("--init-size", type=int, default=settings.init_size, help="initial design size")
    parser.add_argument("--runs", type=int, default=settings.runs, help="independent runs per mode")
    parser.add_argument("--seed", type=int, default=settings.master_seed, help="master seed")
    parser.add_argument("--budget", type=int, default=settings.budget, help="maximum added samples per run")
    parser.add_argument("--thresholds", type=int, default=settings.conventional_thresholds,
                        help="threshold count of the conventional baseline")
    parser.add_argument("--design", choices=[m.value for m in DesignMethod], default=DesignMethod.SOBOL.value,
                        help="initial design generator")
    parser.add_argument("--out", default=settings.output_dir, help="output directory")
    parser.add_argument("--reference", help="reference CDF table (y,F)")
    parser.add_argument("--regen-reference", type=int, metavar="N_SAMPLES",
                        help="regenerate the Monte Carlo reference with this many samples")
    parser.add_argument("--workers", type=int, default=settings.workers, help="parallel runs")
    parser.add_argument("--log-level", default=settings.log_level)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Translate parsed flags into a validated experiment configuration."""
    if args.benchmark not in PRESETS:
        raise UnknownBenchmark(f"unknown benchmark '{args.benchmark}'; choose from {sorted(PRESETS)}")
    modes = [MODE_NAMES[name] for name in (args.mode or ["gaussian"])]
    return ExperimentConfig(
        benchmark=args.benchmark,
        modes=modes,
        y_min=args.ymin,
        y_max=args.ymax,
        tail_mode=TAIL_NAMES[args.tail] if args.tail else None,
        eps_bar=args.eps_bar,
        kbar=args.kbar,
        pool_size=args.pool_size,
        init_size=args.init_size,
        budget=args.budget,
        conventional_thresholds=args.thresholds,
        design_method=DesignMethod(args.design),
        runs=args.runs,
        master_seed=args.seed,
        output_dir=args.out,
        reference_path=args.reference,
        regen_reference=args.regen_reference,
        workers=args.workers,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    try:
        config = config_from_args(args)
        service = ExperimentService()
        service.resolve_range(config)
    except (ValidationError, UnknownBenchmark, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG_ERROR

    try:
        aggregate = service.run_experiment(config)
    except DistributionLearningError as e:
        logger.error(f"Experiment failed: {e}", exc_info=True)
        return EXIT_RUNTIME_ERROR
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return EXIT_RUNTIME_ERROR

    json_path, table_path = service.aggregate_paths(config)
    print(table_path.read_text(), end="")
    print(f"Aggregate: {json_path}")
    return EXIT_PARTIAL if aggregate.partial else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
