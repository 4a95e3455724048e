"""Experiment configuration and aggregate report models."""

from datetime import datetime
from enum import Enum
from typing import List, Optional
import uuid

from pydantic import BaseModel, Field, model_validator

from app.config import get_settings
from app.models.learning import AlConfig, LearningMode, TailMode
from app.models.sampling import DesignMethod


class ExperimentConfig(BaseModel):
    """Repeated learning runs on one benchmark."""
    benchmark: str
    modes: List[LearningMode] = Field(default=[LearningMode.GAUSSIAN_KERNEL], min_length=1)
    y_min: Optional[float] = None
    y_max: Optional[float] = None
    tail_mode: Optional[TailMode] = None
    eps_bar: float = Field(default_factory=lambda: get_settings().eps_bar, gt=0)
    kbar: float = Field(default_factory=lambda: get_settings().kbar, gt=0)
    pool_size: int = Field(default_factory=lambda: get_settings().pool_size, ge=1_000)
    init_size: int = Field(default_factory=lambda: get_settings().init_size, ge=2)
    budget: int = Field(default_factory=lambda: get_settings().budget, ge=0)
    conventional_thresholds: int = Field(default_factory=lambda: get_settings().conventional_thresholds, ge=1)
    design_method: DesignMethod = DesignMethod.SOBOL
    runs: int = Field(default_factory=lambda: get_settings().runs, ge=1)
    master_seed: int = Field(default_factory=lambda: get_settings().master_seed, ge=0)
    output_dir: str = Field(default_factory=lambda: get_settings().output_dir)
    reference_path: Optional[str] = None
    regen_reference: Optional[int] = Field(default=None, ge=1)
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)

    @model_validator(mode="after")
    def check_range(self) -> "ExperimentConfig":
        if self.y_min is not None and self.y_max is not None and not self.y_min < self.y_max:
            raise ValueError(f"range must satisfy y_min < y_max, got [{self.y_min}, {self.y_max}]")
        return self

    def run_seed(self, run_index: int) -> int:
        """Per-run seed: master seed plus run index."""
        return self.master_seed + run_index

    def al_config(self, mode: LearningMode, run_index: int, y_min: float, y_max: float,
                  tail_mode: TailMode, optimizer_starts: int = 5,
                  prediction_chunk_size: int = 20_000) -> AlConfig:
        return AlConfig(
            y_min=y_min,
            y_max=y_max,
            eps_bar=self.eps_bar,
            kbar=self.kbar,
            pool_size=self.pool_size,
            init_size=self.init_size,
            learning_mode=mode,
            tail_mode=tail_mode,
            master_seed=self.run_seed(run_index),
            budget=self.budget,
            conventional_thresholds=self.conventional_thresholds,
            design_method=self.design_method,
            optimizer_starts=optimizer_starts,
            prediction_chunk_size=prediction_chunk_size,
        )


class RunStatus(str, Enum):
    """Outcome of one run inside an experiment."""
    COMPLETED = "completed"
    FAILED = "failed"


class RunManifestEntry(BaseModel):
    """Files and headline numbers of one run."""
    mode: LearningMode
    run_index: int
    seed: int
    status: RunStatus
    report_path: Optional[str] = None
    cdf_path: Optional[str] = None
    eps_e: Optional[float] = None
    n_model_calls: Optional[int] = None
    error: Optional[str] = None


class StatisticSummary(BaseModel):
    """Mean and absolute coefficient of variation of an estimate over runs."""
    mean: float
    abs_cov: Optional[float] = None


class MomentSummary(BaseModel):
    """Cross-run summary of the estimated moments."""
    mean: StatisticSummary
    std: StatisticSummary
    skewness: StatisticSummary
    kurtosis: StatisticSummary


class OutputHistogram(BaseModel):
    """Histogram of the outputs of adaptively added training samples."""
    edges: List[float]
    counts: List[int]


class MethodSummary(BaseModel):
    """Cross-run statistics for one learning mode."""
    mode: LearningMode
    runs_completed: int
    runs_failed: int
    mean_eps_e: Optional[float] = None
    std_eps_e: Optional[float] = None
    mean_model_calls: Optional[float] = None
    mean_added_samples: Optional[float] = None
    moments: Optional[MomentSummary] = None
    training_outputs: Optional[OutputHistogram] = None


class ReferenceInfo(BaseModel):
    """Reference CDF used for validation."""
    benchmark: str
    path: str
    seed: Optional[int] = None
    samples: int
    exact: bool = False
    moments: Optional[dict] = None


class AggregateReport(BaseModel):
    """Tables-shaped summary of an experiment."""
    benchmark: str
    y_min: float
    y_max: float
    tail_mode: TailMode
    config: ExperimentConfig
    reference: ReferenceInfo
    methods: List[MethodSummary]
    manifest: List[RunManifestEntry]
    partial: bool = False


class JobStatus(str, Enum):
    """Lifecycle of an experiment submitted over HTTP."""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


class ExperimentJob(BaseModel):
    """Experiment submitted through the API."""
    job_id: str = Field(default_factory=lambda: uuid.uuid4().hex)
    status: JobStatus = JobStatus.PENDING
    config: ExperimentConfig
    aggregate_path: Optional[str] = None
    partial: bool = False
    error: Optional[str] = None
    created_at: datetime = Field(default_factory=datetime.utcnow)
    updated_at: datetime = Field(default_factory=datetime.utcnow)

    class Config:
        json_encoders = {
            datetime: lambda v: v.isoformat()
        }


class ReferenceRequest(BaseModel):
    """Request to build (or fetch from cache) a reference CDF table."""
    benchmark: str
    samples: int = Field(default=100_000, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)


class ExperimentJobView(BaseModel):
    """Job state plus its aggregate once available."""
    job: ExperimentJob
    aggregate: Optional[AggregateReport] = None
