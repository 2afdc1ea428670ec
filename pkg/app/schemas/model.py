"""
Mode model schemas: scalers, per-mode training data, trained models and archives.
"""

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.solver import SolverConfig
from app.schemas.types import ArrayModel, FloatArray

ARCHIVE_FORMAT_VERSION = 1


class Scaler(ArrayModel):
    """Per-variable mean and standard deviation of a mode's training data."""

    mean: FloatArray
    std: FloatArray

    @model_validator(mode="after")
    def check_std(self) -> "Scaler":
        if self.mean.ndim != 1 or self.mean.shape != self.std.shape:
            raise ValueError("mean and std must be vectors of equal length")
        if np.any(~(self.std > 0)):
            raise ValueError("std entries must be strictly positive")
        return self

    @property
    def n_variables(self) -> int:
        return int(self.mean.shape[0])


class ModeData(ArrayModel):
    """Raw training samples of one operating mode."""

    samples: FloatArray
    mode_index: int = Field(..., ge=1)

    @model_validator(mode="after")
    def check_matrix(self) -> "ModeData":
        if self.samples.ndim != 2:
            raise ValueError("samples must be an N x m matrix")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_variables(self) -> int:
        return int(self.samples.shape[1])


class ModeModel(ArrayModel):
    """Monitoring model produced after training on a mode."""

    mode_index: int = Field(..., ge=1)
    projection: FloatArray
    importance: FloatArray
    accumulated_importance: FloatArray
    xi: FloatArray
    scaler: Scaler
    t2_threshold: float
    spe_threshold: float
    n_components: int = Field(..., ge=1)
    eta: float = Field(..., ge=0, le=1)
    gamma: float = Field(..., ge=0)
    confidence: float = Field(default=0.99, gt=0, lt=1)

    @model_validator(mode="after")
    def check_shapes(self) -> "ModeModel":
        m = self.scaler.n_variables
        k = self.n_components
        for name in ("projection", "importance", "accumulated_importance"):
            if getattr(self, name).shape != (m, k):
                raise ValueError(f"{name} must have shape ({m}, {k})")
        if self.xi.shape != (k, k):
            raise ValueError(f"xi must have shape ({k}, {k})")
        if self.mode_index == 1 and self.eta != 1.0:
            raise ValueError("the first mode model must use eta = 1")
        return self

    @property
    def n_variables(self) -> int:
        return self.scaler.n_variables


class Provenance(BaseModel):
    """Where an archive's models came from."""

    model_config = ConfigDict(frozen=True)

    seeds: Dict[str, int] = Field(default_factory=dict)
    timestamps: List[str] = Field(default_factory=list)
    sources: List[str] = Field(default_factory=list)


class ModelArchive(BaseModel):
    """A persisted chain of mode models."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    format_version: int = ARCHIVE_FORMAT_VERSION
    models: List[ModeModel]
    config: SolverConfig
    provenance: Provenance = Field(default_factory=Provenance)

    @property
    def latest(self) -> ModeModel:
        return self.models[-1]

    def model_for_mode(self, mode_index: int) -> Optional[ModeModel]:
        for model in self.models:
            if model.mode_index == mode_index:
                return model
        return None
