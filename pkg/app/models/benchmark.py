"""Benchmark model definitions."""

from typing import List

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.learning import TailMode


class BoucWenFrame(BaseModel):
    """Three-story shear frame with Bouc-Wen interstory hysteresis."""
    stiffness: List[float] = [3.0e8, 2.8e8, 1.5e8]  # N/m
    mass: List[float] = [1.0e6, 1.0e6, 1.0e6]  # kg
    alpha: float = Field(default=0.1, gt=0, le=1)
    n_bar: float = 5.0
    a_coef: float = 1.0
    yield_drift: float = Field(default=0.04, gt=0)  # m
    damping_ratio: float = Field(default=0.05, ge=0)
    duration: float = Field(default=10.0, gt=0)  # s

    @field_validator("stiffness", "mass")
    @classmethod
    def check_positive(cls, value: List[float]) -> List[float]:
        if any(v <= 0 for v in value):
            raise ValueError("stiffness and mass entries must be positive")
        return value

    @model_validator(mode="after")
    def check_stories(self) -> "BoucWenFrame":
        if len(self.stiffness) != len(self.mass):
            raise ValueError("stiffness and mass must list the same number of stories")
        return self

    @property
    def stories(self) -> int:
        return len(self.mass)

    @property
    def gamma(self) -> float:
        return 1.0 / (2.0 * self.yield_drift ** self.n_bar)

    @property
    def eta(self) -> float:
        return self.gamma


class BenchmarkPreset(BaseModel):
    """Named benchmark with its range of practical interest."""
    name: str
    dimension: int
    y_min: float
    y_max: float
    tail_mode: TailMode
    description: str


class EvaluateRequest(BaseModel):
    """Points to evaluate with a benchmark model."""
    points: List[List[float]] = Field(min_length=1)


class EvaluateResponse(BaseModel):
    """Model outputs, one per requested point."""
    benchmark: str
    outputs: List[float]
    n_model_calls: int
