"""
Report schemas for scenario reproduction and parameter sweeps.
"""

from datetime import datetime
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class AcceptanceBand(BaseModel):
    """Inclusive FDR/FAR limits (percent) a situation row must satisfy."""

    model_config = ConfigDict(frozen=True)

    min_fdr: Optional[float] = None
    max_far: Optional[float] = None
    min_far: Optional[float] = None

    def check(self, fdr: float, far: float) -> bool:
        if self.min_fdr is not None and fdr < self.min_fdr:
            return False
        if self.max_far is not None and far > self.max_far:
            return False
        if self.min_far is not None and far < self.min_far:
            return False
        return True


class ReportRow(BaseModel):
    """Detection quality of one (situation, fault) cell."""

    model_config = ConfigDict(frozen=True)

    situation: int
    fault: int
    method: str
    model_label: str
    testing_source: str
    fdr: float = Field(..., description="Fault detection rate, percent")
    far: float = Field(..., description="False alarm rate, percent")
    reference_fdr: Optional[float] = None
    reference_far: Optional[float] = None
    passed: Optional[bool] = None


class RunReport(BaseModel):
    """Table-shaped outcome of a full reproduction run."""

    model_config = ConfigDict(frozen=True)

    rows: List[ReportRow]
    config: Dict[str, object]
    seeds: Dict[str, int]
    created_at: datetime = Field(default_factory=datetime.utcnow)

    @property
    def all_passed(self) -> bool:
        return all(row.passed is not False for row in self.rows)


class SweepRow(BaseModel):
    """Outcome of one (gamma, eta) setting of the parameter sweep."""

    model_config = ConfigDict(frozen=True)

    gamma: float
    eta: float
    current_fdr: float
    current_far: float
    previous_fdr: float
    previous_far: float
    anchor_distance: float = Field(..., description="Max column distance from the previous projection")
