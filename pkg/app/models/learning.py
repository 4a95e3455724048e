"""Active learning configuration and run report models."""

from enum import Enum
from typing import Any, List, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.sampling import DesignMethod


class LearningMode(str, Enum):
    """Strategies for picking the next training sample."""
    GAUSSIAN_KERNEL = "gaussian_kernel"
    DIRAC_KERNEL = "dirac_kernel"
    MAX_OF_VARIANCE = "max_of_variance"
    CONVENTIONAL = "conventional"


class TailMode(str, Enum):
    """Which tail the error denominator weights."""
    BOTH = "both"
    CDF_ONLY = "cdf_only"
    CCDF_ONLY = "ccdf_only"


class TerminationReason(str, Enum):
    """Why a learning run stopped."""
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget_exhausted"


class AlConfig(BaseModel):
    """Settings of one active learning run."""
    y_min: float
    y_max: float
    eps_bar: float = Field(default=0.2, gt=0)
    kbar: float = Field(default=2.0, gt=0)
    pool_size: int = Field(default=1_000_000, ge=1_000)
    init_size: int = Field(default=12, ge=2)
    learning_mode: LearningMode = LearningMode.GAUSSIAN_KERNEL
    tail_mode: TailMode = TailMode.BOTH
    master_seed: int = Field(default=0, ge=0)
    budget: int = Field(default=500, ge=0)
    conventional_thresholds: int = Field(default=101, ge=1)
    design_method: DesignMethod = DesignMethod.SOBOL
    optimizer_starts: int = Field(default=5, ge=1)
    prediction_chunk_size: int = Field(default=20_000, ge=1)

    @model_validator(mode="after")
    def check_range(self) -> "AlConfig":
        if not self.y_min < self.y_max:
            raise ValueError(f"range must satisfy y_min < y_max, got [{self.y_min}, {self.y_max}]")
        return self

    @property
    def tolerance(self) -> float:
        """Absolute stopping threshold eps_bar * (y_max - y_min)."""
        return self.eps_bar * (self.y_max - self.y_min)


class MomentSet(BaseModel):
    """First four statistical measures of a distribution."""
    mean: float
    std: float = Field(ge=0)
    skewness: float
    kurtosis: float


class FoldMoments(BaseModel):
    """Moments of the three fold estimates."""
    plus: MomentSet
    mid: MomentSet
    minus: MomentSet


class IterationRecord(BaseModel):
    """One pass through the learning loop that added a training sample."""
    iteration: int
    w_star: float = Field(ge=0)
    wasserstein: float = Field(ge=0)
    y_star: Optional[float] = None
    threshold_w_star: Optional[float] = None
    candidate_index: int
    x_star: List[float]
    y_true: float
    band_fallback: bool = False
    moments: FoldMoments
    n_model_calls: int
    duration_seconds: float = 0.0


class RunReport(BaseModel):
    """Complete, replayable outcome of one learning run."""
    config: AlConfig
    benchmark: Optional[str] = None
    iterations: List[IterationRecord] = []
    termination: TerminationReason
    final_w_star: float
    final_moments: FoldMoments
    initial_size: int
    n_model_calls: int
    added_outputs: List[float] = []
    final_cdf: Optional[Any] = Field(default=None, exclude=True)

    @model_validator(mode="after")
    def check_call_count(self) -> "RunReport":
        if self.n_model_calls != self.initial_size + len(self.iterations):
            raise ValueError("n_model_calls must equal initial design size plus added samples")
        return self

    @property
    def added_samples(self) -> int:
        return len(self.iterations)

    def to_json(self, include_timings: bool = False) -> str:
        """Serialize the report; timings are left out unless requested."""
        exclude = None if include_timings else {"iterations": {"__all__": {"duration_seconds"}}}
        return self.model_dump_json(indent=2, exclude=exclude)
