"""Full-scale learning runs on the benchmark presets (run with -m slow)."""

import json

import pytest

from app.config import Settings
from app.models.experiment import ExperimentConfig
from app.models.learning import LearningMode
from app.services.experiment_service import ExperimentService

pytestmark = pytest.mark.slow


@pytest.fixture
def service(tmp_path):
    return ExperimentService(Settings(reference_dir=str(tmp_path / "references"), workers=4))


def final_mid_moments(aggregate):
    reports = [json.loads(open(entry.report_path).read()) for entry in aggregate.manifest if entry.report_path]
    return [report["final_moments"]["mid"] for report in reports]


def test_toy_gaussian_kernel(tmp_path, service):
    config = ExperimentConfig(benchmark="toy", runs=10, pool_size=200_000, master_seed=1,
                              output_dir=str(tmp_path / "results"), workers=4)
    aggregate = service.run_experiment(config)
    method = aggregate.methods[0]

    assert not aggregate.partial
    assert method.mean_eps_e <= 0.06
    assert method.mean_model_calls <= 12 + 60
    for moments in final_mid_moments(aggregate):
        assert moments["mean"] == pytest.approx(-0.7979, abs=0.04)
        assert moments["std"] == pytest.approx(1.1676, abs=0.03)
        assert moments["skewness"] == pytest.approx(-0.1369, abs=0.06)
        assert moments["kurtosis"] == pytest.approx(3.0617, abs=0.15)


def test_toy_global_modes_need_fewer_calls_than_conventional(tmp_path, service):
    modes = [LearningMode.GAUSSIAN_KERNEL, LearningMode.DIRAC_KERNEL, LearningMode.MAX_OF_VARIANCE,
             LearningMode.CONVENTIONAL]
    config = ExperimentConfig(benchmark="toy", modes=modes, runs=10, pool_size=200_000, master_seed=2,
                              output_dir=str(tmp_path / "results"), workers=4)
    aggregate = service.run_experiment(config)
    calls = {method.mode: method.mean_model_calls for method in aggregate.methods}

    for mode in modes[:3]:
        assert calls[mode] < calls[LearningMode.CONVENTIONAL]


def test_ishigami_gaussian_kernel(tmp_path, service):
    config = ExperimentConfig(benchmark="ishigami", runs=3, pool_size=200_000, master_seed=3,
                              regen_reference=1_000_000, output_dir=str(tmp_path / "results"), workers=3)
    aggregate = service.run_experiment(config)
    method = aggregate.methods[0]

    assert method.mean_eps_e <= 0.08
    assert method.mean_model_calls <= 12 + 400
    assert method.moments.mean.mean == pytest.approx(3.5, abs=0.15)
    assert method.moments.std.mean == pytest.approx(3.7208, abs=0.15)


def test_bouc_wen_ccdf(tmp_path, service):
    config = ExperimentConfig(benchmark="bouc_wen", runs=2, pool_size=200_000, master_seed=4,
                              regen_reference=100_000, output_dir=str(tmp_path / "results"), workers=2)
    aggregate = service.run_experiment(config)
    method = aggregate.methods[0]

    assert aggregate.reference.moments["mean"] == pytest.approx(0.0221, rel=0.1)
    assert method.mean_model_calls <= 12 + 300
    assert method.moments.mean.mean == pytest.approx(0.0221, rel=0.1)
    assert method.moments.std.mean == pytest.approx(0.0160, rel=0.1)
