#!/usr/bin/env python3
"""Simple script to verify the setup."""

import sys
import numpy as np
from app.config import get_settings
from app.models.learning import AlConfig
from app.services.benchmarks import get_benchmark, list_benchmarks
from app.services.gp_surrogate import DesignSet, FitOptions, fit_surrogate
from app.services.sampling import initial_design, sample_pool
from app.services.distribution_estimate import estimate_three_fold_cdf
from app.services.active_learning import global_error


def check_setup():
    """Exercise each service once on the toy benchmark."""
    
    print("🧪 Testing Distribution Learning Setup...")
    print("=" * 50)
    
    # Configuration
    print("1. Testing configuration...")
    try:
        settings = get_settings()
        print(f"   ✅ Configuration loaded successfully")
        print(f"   📊 Environment: {settings.environment}")
        print(f"   📁 Results: {settings.output_dir}, references: {settings.reference_dir}")
    except Exception as e:
        print(f"   ❌ Configuration error: {e}")
        return False
    
    # Benchmarks
    print("\n2. Testing benchmark registry...")
    try:
        names = [preset.name for preset in list_benchmarks()]
        model = get_benchmark("toy")
        print(f"   ✅ Benchmarks available: {', '.join(names)}")
    except Exception as e:
        print(f"   ❌ Benchmark error: {e}")
        return False
    
    # Sampling and surrogate
    print("\n3. Testing design and surrogate fit...")
    try:
        points = initial_design(model.input_spec, 12, seed=0)
        surrogate = fit_surrogate(DesignSet(points, model(points)), FitOptions(seed=0))
        print(f"   ✅ Surrogate fitted, length-scales {np.round(surrogate.length_scales, 3).tolist()}")
    except Exception as e:
        print(f"   ❌ Surrogate error: {e}")
        return False
    
    # Three-fold CDF
    print("\n4. Testing three-fold CDF estimate...")
    try:
        config = AlConfig(y_min=-5.0, y_max=3.0, pool_size=10_000)
        pool = sample_pool(model.input_spec, config.pool_size, seed=0)
        cdf = estimate_three_fold_cdf(surrogate, pool, config.kbar)
        error = global_error(cdf, config)
        print(f"   ✅ W* = {error:.4f} against tolerance {config.tolerance:.4f}")
    except Exception as e:
        print(f"   ❌ CDF estimate error: {e}")
        return False
    
    print("\n" + "=" * 50)
    print("🎉 Setup test completed!")
    print("\n📝 Next steps:")
    print("   1. Configure your .env file if the defaults do not fit")
    print("   2. Run: python -m app.cli --benchmark toy --runs 2")
    print("   3. Or run: python -m app.main and visit http://localhost:8000/docs")
    
    return True

if __name__ == "__main__":
    try:
        sys.exit(0 if check_setup() else 1)
    except KeyboardInterrupt:
        print("\n\n⏹️  Test interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n\n💥 Unexpected error: {e}")
        sys.exit(1)
