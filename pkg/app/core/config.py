"""
Configuration settings for SPCA-SI Monitor.
"""

from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.schemas.solver import SolverConfig


class Settings(BaseSettings):
    """Settings loaded from a KEY=VALUE config file, the environment and CLI overrides."""

    model_config = SettingsConfigDict(case_sensitive=True, extra="forbid")

    # Basic settings
    PROJECT_NAME: str = "SPCA-SI Monitor"
    VERSION: str = "1.0.0"

    # Environment
    ENVIRONMENT: str = Field(default="development")
    LOG_LEVEL: str = Field(default="INFO")

    # Solver
    LAMBDA: float = Field(default=0.1, ge=0, description="L1 sparsity weight")
    MU0: float = Field(default=1.0, gt=0)
    TAU1: float = Field(default=0.9, gt=0, lt=1)
    TAU2: float = Field(default=0.999, gt=0, lt=1)
    EPSILON: float = Field(default=1e-8, gt=0)
    ZETA: float = Field(default=1e-3, gt=0)
    ALPHA_P: float = Field(default=0.001, gt=0)
    ALPHA_MU: float = Field(default=0.01, gt=0)
    INITIAL_STEP: float = Field(default=1e-4, gt=0)
    MAX_ITERS: int = Field(default=5000, gt=0)
    NORM_TOLERANCE: float = Field(default=1e-2, gt=0)
    CONVERGENCE_TOLERANCE: float = Field(default=1e-6, gt=0)
    MAX_BACKTRACKS: int = Field(default=60, ge=0)
    SEED: int = Field(default=0, ge=0)

    # Monitoring
    CPV_THRESHOLD: float = Field(default=0.90, gt=0, le=1)
    N_COMPONENTS: Optional[int] = Field(default=None, ge=1, description="Overrides CPV selection when set")
    CONFIDENCE: float = Field(default=0.99, gt=0, lt=1)

    # Continual updates (importance is in Gram units)
    GAMMA: float = Field(default=1000.0, ge=0)
    ETA: float = Field(default=0.5, ge=0, le=1)
    UPDATE_RESCALE_VARIANCE: bool = Field(
        default=False, description="Standardize later modes by their own variances instead of the chain's"
    )

    # Numerical case
    NOISE_VARIANCE: float = Field(default=1e-6, ge=0, description="Variance of the measurement noise")

    # Scenario reproduction
    SCENARIO_COMPONENTS: int = Field(default=3, ge=1)

    def solver_config(self) -> SolverConfig:
        """Build the solver hyperparameters."""
        return SolverConfig(
            lambda_=self.LAMBDA,
            mu0=self.MU0,
            tau1=self.TAU1,
            tau2=self.TAU2,
            epsilon=self.EPSILON,
            zeta=self.ZETA,
            alpha_p=self.ALPHA_P,
            alpha_mu=self.ALPHA_MU,
            initial_step=self.INITIAL_STEP,
            max_iters=self.MAX_ITERS,
            norm_tolerance=self.NORM_TOLERANCE,
            convergence_tolerance=self.CONVERGENCE_TOLERANCE,
            max_backtracks=self.MAX_BACKTRACKS,
            seed=self.SEED,
        )

    def echo(self) -> Dict[str, Any]:
        """Settings as a flat dict for report headers."""
        return self.model_dump(exclude={"PROJECT_NAME", "VERSION"})


def load_settings(config_file: Optional[Union[str, Path]] = None, **overrides: Any) -> Settings:
    """Load settings from an optional config file; non-None overrides win."""
    values = {key: value for key, value in overrides.items() if value is not None}
    if config_file is not None and not Path(config_file).is_file():
        raise FileNotFoundError(f"config file not found: {config_file}")
    return Settings(_env_file=config_file, **values)


# Create global settings instance
settings = Settings()
