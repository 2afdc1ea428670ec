"""
Monitoring result schemas.
"""

import numpy as np
from pydantic import Field, model_validator

from app.schemas.types import ArrayModel, FloatArray


class MonitoringResult(ArrayModel):
    """Per-sample T2/SPE statistics, thresholds and alarms."""

    t2: FloatArray
    spe: FloatArray
    t2_threshold: float
    spe_threshold: float
    alarms: np.ndarray

    @model_validator(mode="after")
    def check_alarm_rule(self) -> "MonitoringResult":
        if self.t2.shape != self.spe.shape or self.alarms.shape != self.t2.shape:
            raise ValueError("t2, spe and alarms must have one entry per sample")
        expected = (self.t2 > self.t2_threshold) | (self.spe > self.spe_threshold)
        if not np.array_equal(self.alarms, expected):
            raise ValueError("alarms must equal the OR of the two exceedance vectors")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.t2.shape[0])


class DetectionScore(ArrayModel):
    """Fault detection rate and false alarm rate of a labeled test set."""

    fdr: float = Field(..., ge=0, le=1)
    far: float = Field(..., ge=0, le=1)
    fault_start_index: int = Field(..., ge=0)
