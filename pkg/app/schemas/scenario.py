"""
Scenario schemas: source distributions, mode and fault specifications, situation plans.
"""

from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.types import ArrayModel, FloatArray


class SourceDistribution(BaseModel):
    """Distribution of one latent source."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform", "normal"]
    lo: Optional[float] = None
    hi: Optional[float] = None
    mean: Optional[float] = None
    variance: Optional[float] = None

    @model_validator(mode="after")
    def check_parameters(self) -> "SourceDistribution":
        if self.kind == "uniform":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError("uniform source requires lo < hi")
        else:
            if self.mean is None or self.variance is None or not self.variance > 0:
                raise ValueError("normal source requires a mean and variance > 0")
        return self

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "SourceDistribution":
        return cls(kind="uniform", lo=lo, hi=hi)

    @classmethod
    def normal(cls, mean: float, variance: float) -> "SourceDistribution":
        return cls(kind="normal", mean=mean, variance=variance)

    @property
    def expectation(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return self.mean

    @property
    def second_central_moment(self) -> float:
        if self.kind == "uniform":
            return (self.hi - self.lo) ** 2 / 12.0
        return self.variance


class ModeSpec(BaseModel):
    """Source distributions defining one operating mode."""

    model_config = ConfigDict(frozen=True)

    label: str
    sources: List[SourceDistribution] = Field(..., min_length=3, max_length=3)


class FaultSpec(BaseModel):
    """A step or drift fault on one measured variable."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["step", "drift"]
    variable_index: int = Field(..., ge=1, description="1-based variable index")
    magnitude: float = 0.0
    onset_index: int = Field(..., ge=0, description="Samples with 1-based index k > onset are faulty")
    drift_slope: float = 0.0


class PlanRow(BaseModel):
    """One situation of a comparative scheme."""

    model_config = ConfigDict(frozen=True)

    situation: int
    method: Literal["SPCA", "SPCA-SI"]
    training_source: str
    model_label: str
    testing_source: str
    model_mode: int = Field(..., ge=1, description="Last mode the model was trained on")
    testing_mode: int = Field(..., ge=1)


class ScenarioPlan(BaseModel):
    """Ordered situations of a comparative scheme."""

    model_config = ConfigDict(frozen=True)

    rows: List[PlanRow]

    def __len__(self) -> int:
        return len(self.rows)

    def situation(self, number: int) -> PlanRow:
        for row in self.rows:
            if row.situation == number:
                return row
        raise KeyError(number)


class ScenarioBundle(ArrayModel):
    """Training and test sets for every mode of a scenario plus its plan."""

    fault_id: int
    fault: FaultSpec
    modes: List[ModeSpec]
    train_sets: List[FloatArray]
    test_sets: List[FloatArray]
    plan: ScenarioPlan
    seeds: Dict[str, int]

    @property
    def n_modes(self) -> int:
        return len(self.modes)
