#!/usr/bin/env python3
"""Build the reference CDF tables used to validate learning runs."""

import argparse
import sys
import logging

from app.config import get_settings
from app.services.benchmarks import PRESETS
from app.services.experiment_service import ExperimentService, generate_reference


def seed_references(benchmarks, samples=None, workers=1):
    """Generate (or reuse cached) references for the given benchmarks."""

    settings = get_settings()
    service = ExperimentService(settings)
    print("🌱 Building reference solutions...")

    try:
        for name in benchmarks:
            count = samples or service.default_reference_samples(name)
            print(f"\n📈 {name}: {count if name != 'toy' else 'exact'} samples")
            info = generate_reference(name, count, settings.reference_seed,
                                      reference_dir=settings.reference_dir, workers=workers, settings=settings)
            print(f"   ✅ Written to {info.path}")
            if info.moments:
                print(f"   • mean {info.moments['mean']:.4f}, std {info.moments['std']:.4f}")

        print("\n🎉 Reference solutions ready!")

    except Exception as e:
        print(f"❌ Error building references: {e}")
        return False

    return True


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("benchmarks", nargs="*", default=sorted(PRESETS))
    parser.add_argument("--samples", type=int, help="Monte Carlo sample count (default from settings)")
    parser.add_argument("--workers", type=int, default=get_settings().workers)
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    try:
        ok = seed_references(args.benchmarks, args.samples, args.workers)
        sys.exit(0 if ok else 1)
    except KeyboardInterrupt:
        print("\n\n⏹️  Seeding interrupted by user")
        sys.exit(1)
