"""
Solver schemas: hyperparameters, prior terms and iteration traces.
"""

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.types import ArrayModel, FloatArray


class SolverConfig(BaseModel):
    """Hyperparameters of the APG solver."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    lambda_: float = Field(default=0.1, ge=0, alias="lambda", description="L1 sparsity weight")
    mu0: float = Field(default=1.0, gt=0, description="Initial Lagrange parameter")
    tau1: float = Field(default=0.9, gt=0, lt=1, description="Momentum constant of the adaptive rate")
    tau2: float = Field(default=0.999, gt=0, lt=1, description="Momentum constant of the adaptive rate")
    epsilon: float = Field(default=1e-8, gt=0, description="Conditioning constant of the adaptive rate")
    zeta: float = Field(default=1e-3, gt=0, description="Conditioning constant of importance normalization")
    alpha_p: float = Field(default=0.001, gt=0, description="Base rate for projection steps")
    alpha_mu: float = Field(default=0.01, gt=0, description="Base rate for Lagrange steps")
    initial_step: float = Field(default=1e-4, gt=0, description="Initial adaptive rates t^y, t^p, t^mu")
    max_iters: int = Field(default=5000, gt=0)
    norm_tolerance: float = Field(default=1e-2, gt=0)
    convergence_tolerance: float = Field(default=1e-6, gt=0)
    max_backtracks: int = Field(default=60, ge=0, description="Step halvings allowed for the proximal fallback")
    seed: int = Field(default=0, ge=0)


class PriorTerm(ArrayModel):
    """Quadratic surrogate of the previous modes' loss for one column."""

    anchor: FloatArray
    weights: FloatArray

    @model_validator(mode="after")
    def check_shapes(self) -> "PriorTerm":
        if self.anchor.ndim != 1 or self.anchor.shape != self.weights.shape:
            raise ValueError("anchor and weights must be vectors of equal length")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights < 0):
            raise ValueError("prior weights must be finite and nonnegative")
        return self

    @property
    def is_inactive(self) -> bool:
        """True when every weight is zero, i.e. the term vanishes identically."""
        return not np.any(self.weights)


class SolverTrace(BaseModel):
    """Per-iteration record of one APG run, stored column-wise."""

    model_config = ConfigDict(frozen=True)

    objective: List[float] = Field(default_factory=list, description="J of the accepted iterate")
    previous_objective: List[float] = Field(default_factory=list, description="J of the previous iterate at the same mu")
    smooth: List[float] = Field(default_factory=list)
    step_y: List[float] = Field(default_factory=list)
    step_p: List[float] = Field(default_factory=list)
    step_mu: List[float] = Field(default_factory=list)
    momentum: List[float] = Field(default_factory=list)
    mu: List[float] = Field(default_factory=list)
    delta_norm: List[float] = Field(default_factory=list)
    accepted_z: List[bool] = Field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.objective)


class APGResult(ArrayModel):
    """Output of a single-column APG solve."""

    projection: FloatArray
    raw_importance: FloatArray
    mu: float
    trace: SolverTrace


class ProjectionFit(ArrayModel):
    """Projection and importance matrices assembled by deflation."""

    projection: FloatArray
    importance: FloatArray
    raw_importance: FloatArray
    final_mu: List[float]
    traces: List[SolverTrace]
