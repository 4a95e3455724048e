"""Random input and candidate pool models."""

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class MarginalKind(str, Enum):
    """Supported marginal distributions."""
    STANDARD_GAUSSIAN = "standard_gaussian"
    UNIFORM = "uniform"


class DesignMethod(str, Enum):
    """Low-discrepancy generators for the initial design."""
    SOBOL = "sobol"
    LHS = "lhs"


class Marginal(BaseModel):
    """One independent input marginal."""
    kind: MarginalKind
    lower: Optional[float] = None
    upper: Optional[float] = None

    @model_validator(mode="after")
    def check_bounds(self) -> "Marginal":
        if self.kind == MarginalKind.UNIFORM:
            if self.lower is None or self.upper is None:
                raise ValueError("uniform marginal needs lower and upper bounds")
            if not self.lower < self.upper:
                raise ValueError(f"uniform bounds must satisfy lower < upper, got [{self.lower}, {self.upper}]")
        return self

    @classmethod
    def standard_gaussian(cls) -> "Marginal":
        return cls(kind=MarginalKind.STANDARD_GAUSSIAN)

    @classmethod
    def uniform(cls, lower: float, upper: float) -> "Marginal":
        return cls(kind=MarginalKind.UNIFORM, lower=lower, upper=upper)


class RandomInputSpec(BaseModel):
    """Independent random inputs X = [X_1, ..., X_n]."""
    marginals: List[Marginal] = Field(min_length=1)

    @property
    def dimension(self) -> int:
        return len(self.marginals)

    @classmethod
    def gaussian(cls, dimension: int) -> "RandomInputSpec":
        return cls(marginals=[Marginal.standard_gaussian() for _ in range(dimension)])

    @classmethod
    def uniform(cls, dimension: int, lower: float, upper: float) -> "RandomInputSpec":
        return cls(marginals=[Marginal.uniform(lower, upper) for _ in range(dimension)])


class CandidatePool(BaseModel):
    """Monte Carlo population used as training candidates and integration sample."""
    points: np.ndarray
    seed: int
    generation: int = 0

    class Config:
        arbitrary_types_allowed = True
        frozen = True

    @field_validator("points")
    @classmethod
    def check_points(cls, value: np.ndarray) -> np.ndarray:
        if value.ndim != 2 or value.shape[0] < 1:
            raise ValueError("pool points must be a non-empty (N, n) array")
        value.setflags(write=False)
        return value

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]
