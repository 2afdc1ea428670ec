"""
Shared test fixtures and configuration for SPCA-SI Monitor tests.
"""

from pathlib import Path

import numpy as np
import pytest

from app.core.config import Settings
from app.schemas.model import ModeData, ModelArchive, ModeModel, Provenance, Scaler
from app.schemas.solver import SolverConfig
from app.services.continual import continual_updater
from app.services.datagen import MODE_1, MODE_2, Purpose, datagen_service

FIXTURES_DIR = Path(__file__).parent / "fixtures"

# Seed shared by the numerical-case fixtures
SCENARIO_SEED = 7


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for test-local random data."""
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture
def test_settings() -> Settings:
    """Create test settings with overrides."""
    return Settings(ENVIRONMENT="test", LOG_LEVEL="DEBUG")


@pytest.fixture(scope="session")
def solver_config() -> SolverConfig:
    """Default solver hyperparameters."""
    return SolverConfig()


@pytest.fixture(scope="session")
def mode1_samples() -> np.ndarray:
    """Numerical-case Mode 1 training data."""
    return datagen_service.generate_mode(MODE_1, 1000, SCENARIO_SEED, 1, Purpose.TRAINING)


@pytest.fixture(scope="session")
def mode2_samples() -> np.ndarray:
    """Numerical-case Mode 2 training data."""
    return datagen_service.generate_mode(MODE_2, 1000, SCENARIO_SEED, 2, Purpose.TRAINING)


@pytest.fixture(scope="session")
def mode1_test_samples() -> np.ndarray:
    """Held-out normal Mode 1 data."""
    return datagen_service.generate_mode(MODE_1, 1000, SCENARIO_SEED, 1, Purpose.TESTING)


@pytest.fixture(scope="session")
def first_model(mode1_samples, solver_config) -> ModeModel:
    """Mode 1 model with three components."""
    return continual_updater.train_first_mode(
        ModeData(samples=mode1_samples, mode_index=1),
        solver_config,
        cpv_threshold=0.90,
        n_components=3,
    )


@pytest.fixture
def archive_path(tmp_path) -> Path:
    """Path for a new archive file."""
    return tmp_path / "chain.json"


@pytest.fixture
def example_chain_path() -> Path:
    """Checked-in example archive."""
    return FIXTURES_DIR / "example_chain.json"


# Test data generators
class TestDataFactory:
    """Factory for small hand-built models and archives."""

    @staticmethod
    def create_model(mode_index: int = 1, **overrides) -> ModeModel:
        """Two variables, one component."""
        data = {
            "mode_index": mode_index,
            "projection": [[0.6], [0.8]],
            "importance": [[0.5], [0.25]],
            "accumulated_importance": [[0.5 * mode_index], [0.25 * mode_index]],
            "xi": [[1.5]],
            "scaler": Scaler(mean=[1.0, -2.0], std=[0.5, 2.0]),
            "t2_threshold": 6.5,
            "spe_threshold": 0.125,
            "n_components": 1,
            "eta": 1.0 if mode_index == 1 else 0.5,
            "gamma": 0.0 if mode_index == 1 else 1.0,
        }
        data.update(overrides)
        return ModeModel(**data)

    @staticmethod
    def create_archive(n_models: int = 1, **overrides) -> ModelArchive:
        """Chain of n hand-built models."""
        data = {
            "models": [TestDataFactory.create_model(i) for i in range(1, n_models + 1)],
            "config": SolverConfig(),
            "provenance": Provenance(seeds={"mode1": 7}, timestamps=["2024-01-01T00:00:00+00:00"]),
        }
        data.update(overrides)
        return ModelArchive(**data)


@pytest.fixture
def factory() -> TestDataFactory:
    """Test data factory."""
    return TestDataFactory()
