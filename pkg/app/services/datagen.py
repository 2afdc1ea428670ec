"""
Numerical-case generator: three latent sources mixed into eight measured
variables, per-mode source distributions, fault injection and situation plans.
"""

from enum import IntEnum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import structlog
import yaml
from pydantic import TypeAdapter, ValidationError

from app.core.exceptions import DataError, InvalidArgumentError
from app.schemas.scenario import (
    FaultSpec,
    ModeSpec,
    PlanRow,
    ScenarioBundle,
    ScenarioPlan,
    SourceDistribution,
)

logger = structlog.get_logger()

MIXING_MATRIX = np.array(
    [
        [0.55, 0.82, 0.94],
        [0.23, 0.45, 0.62],
        [-0.61, 0.62, 0.41],
        [0.49, 0.79, 0.89],
        [0.89, -0.92, 0.06],
        [0.76, 0.74, 0.35],
        [0.46, 0.28, 0.81],
        [-0.02, 0.41, 0.01],
    ]
)
MIXING_MATRIX.setflags(write=False)

# Measurement noise of standard deviation 0.001
NOISE_VARIANCE = 1e-6
N_TRAIN = 1000
N_TEST = 1000
FAULT_ONSET = 500

MODE_1 = ModeSpec(
    label="Mode 1",
    sources=[
        SourceDistribution.uniform(-10.0, -9.7),
        SourceDistribution.normal(-5.0, 1.0),
        SourceDistribution.uniform(2.0, 3.0),
    ],
)
MODE_2 = ModeSpec(
    label="Mode 2",
    sources=[
        SourceDistribution.uniform(-6.0, -5.7),
        SourceDistribution.normal(-1.0, 1.0),
        SourceDistribution.uniform(3.0, 4.2),
    ],
)

NUMERICAL_FAULTS: Dict[int, FaultSpec] = {
    1: FaultSpec(kind="step", variable_index=3, magnitude=0.08, onset_index=FAULT_ONSET),
    2: FaultSpec(kind="step", variable_index=6, magnitude=0.08, onset_index=FAULT_ONSET),
    3: FaultSpec(kind="drift", variable_index=1, onset_index=FAULT_ONSET, drift_slope=0.001),
}


class Purpose(IntEnum):
    """Second key of a PRNG stream; the first is the mode index."""

    TRAINING = 0
    TESTING = 1
    MONTE_CARLO = 2


def make_rng(seed: int, mode_index: int, purpose: Purpose) -> np.random.Generator:
    """Independent PCG64 stream for one (mode, purpose) pair."""
    sequence = np.random.SeedSequence(seed, spawn_key=(mode_index, int(purpose)))
    return np.random.Generator(np.random.PCG64(sequence))


class DataGenerator:
    """Service for generating numerical-case data and scenario bundles."""

    def __init__(self, mixing_matrix: np.ndarray = MIXING_MATRIX, noise_variance: float = NOISE_VARIANCE):
        self.mixing_matrix = mixing_matrix
        self.noise_variance = noise_variance

    @property
    def n_variables(self) -> int:
        return int(self.mixing_matrix.shape[0])

    def draw_sources(self, spec: ModeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
        """n x 3 matrix of latent source draws, one column per source."""
        columns = []
        for source in spec.sources:
            if source.kind == "uniform":
                columns.append(rng.uniform(source.lo, source.hi, size=n))
            else:
                columns.append(rng.normal(source.mean, np.sqrt(source.variance), size=n))
        return np.column_stack(columns)

    def mix_sources(
        self,
        sources: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        noise_variance: Optional[float] = None,
    ) -> np.ndarray:
        """x = A s + e for every row s of sources."""
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        noise_variance = self.noise_variance if noise_variance is None else noise_variance
        mixed = sources @ self.mixing_matrix.T
        if noise_variance > 0:
            if rng is None:
                raise InvalidArgumentError("a generator is required when noise is enabled")
            mixed = mixed + rng.normal(0.0, np.sqrt(noise_variance), size=mixed.shape)
        return mixed

    def generate_mode(
        self,
        spec: ModeSpec,
        n: int,
        seed: int,
        mode_index: int = 1,
        purpose: Purpose = Purpose.TRAINING,
        noise_variance: Optional[float] = None,
    ) -> np.ndarray:
        """Deterministic n x 8 sample of one mode."""
        if n < 1:
            raise InvalidArgumentError(f"sample count must be positive, got {n}")
        rng = make_rng(seed, mode_index, purpose)
        sources = self.draw_sources(spec, n, rng)
        return self.mix_sources(sources, rng, noise_variance)

    def inject_fault(self, X: np.ndarray, spec: FaultSpec) -> np.ndarray:
        """Copy of X with the fault added to samples after the onset."""
        X = np.array(X, dtype=float)
        n_samples, n_variables = X.shape
        column = spec.variable_index - 1
        if column >= n_variables:
            raise InvalidArgumentError(
                f"fault variable x{spec.variable_index} is out of range for {n_variables} variables"
            )
        if spec.onset_index > n_samples:
            raise InvalidArgumentError(f"fault onset {spec.onset_index} is beyond {n_samples} samples")

        # 0-based row i is sample k = i + 1; samples k > onset are faulty
        rows = np.arange(spec.onset_index, n_samples)
        if spec.kind == "step":
            X[rows, column] += spec.magnitude
        else:
            X[rows, column] += spec.drift_slope * (rows + 1 - spec.onset_index)
        return X

    def build_chain_plan(self, n_modes: int) -> ScenarioPlan:
        """
        Comparative scheme for n sequential modes.

        For every mode i the chain model (SPCA-SI for i > 1) is tested on
        mode i and then on every earlier mode, followed by a standalone SPCA
        model trained on mode i alone, tested the same way. Two modes give
        the five situations of the numerical case.
        """
        if n_modes < 1:
            raise InvalidArgumentError(f"a plan needs at least one mode, got {n_modes}")

        rows: List[PlanRow] = []
        labels = iter(_model_labels())
        chain_label = next(labels)

        def add(method: str, training: str, label: str, model_mode: int, testing_mode: int) -> None:
            rows.append(
                PlanRow(
                    situation=len(rows) + 1,
                    method=method,
                    training_source=training,
                    model_label=f"Model {label}",
                    testing_source=f"Mode {testing_mode}",
                    model_mode=model_mode,
                    testing_mode=testing_mode,
                )
            )

        add("SPCA", "Mode 1", chain_label, 1, 1)
        for mode in range(2, n_modes + 1):
            previous_label, chain_label = chain_label, next(labels)
            add("SPCA-SI", f"Model {previous_label} + Mode {mode}", chain_label, mode, mode)
            for earlier in range(mode - 1, 0, -1):
                add("SPCA-SI", "-", chain_label, mode, earlier)
            standalone_label = next(labels)
            add("SPCA", f"Mode {mode}", standalone_label, mode, mode)
            for earlier in range(mode - 1, 0, -1):
                add("SPCA", "-", standalone_label, mode, earlier)

        return ScenarioPlan(rows=rows)

    def build_numerical_scenario(
        self,
        fault_id: int,
        seed: int,
        modes: Optional[Sequence[ModeSpec]] = None,
        n_train: int = N_TRAIN,
        n_test: int = N_TEST,
        noise_variance: Optional[float] = None,
    ) -> ScenarioBundle:
        """Training and faulty test sets for every mode plus the situation plan."""
        if fault_id not in NUMERICAL_FAULTS:
            raise InvalidArgumentError(f"fault must be one of {sorted(NUMERICAL_FAULTS)}, got {fault_id}")
        modes = list(modes) if modes is not None else [MODE_1, MODE_2]
        fault = NUMERICAL_FAULTS[fault_id]

        train_sets = []
        test_sets = []
        for mode_index, spec in enumerate(modes, start=1):
            train_sets.append(
                self.generate_mode(spec, n_train, seed, mode_index, Purpose.TRAINING, noise_variance)
            )
            clean = self.generate_mode(spec, n_test, seed, mode_index, Purpose.TESTING, noise_variance)
            test_sets.append(self.inject_fault(clean, fault))

        logger.info(
            "scenario_generated",
            fault_id=fault_id,
            seed=seed,
            n_modes=len(modes),
            n_train=n_train,
            n_test=n_test,
            noise_variance=self.noise_variance if noise_variance is None else noise_variance,
        )
        return ScenarioBundle(
            fault_id=fault_id,
            fault=fault,
            modes=modes,
            train_sets=train_sets,
            test_sets=test_sets,
            plan=self.build_chain_plan(len(modes)),
            seeds={"seed": seed},
        )

    def load_mode_specs(self, path: Union[str, Path]) -> List[ModeSpec]:
        """Read a YAML list of mode specifications."""
        path = Path(path)
        try:
            with path.open("r", encoding="utf-8") as handle:
                content = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            logger.error("mode_file_unreadable", path=str(path), error=str(exc))
            raise DataError(f"{path}: invalid YAML: {exc}") from exc

        try:
            specs = TypeAdapter(List[ModeSpec]).validate_python(content)
        except ValidationError as exc:
            raise InvalidArgumentError(f"{path}: invalid mode specification: {exc}") from exc
        if len(specs) < 2:
            raise InvalidArgumentError(f"{path}: at least two modes are required, got {len(specs)}")
        return specs


def _model_labels():
    """A, B, ..., Z, AA, AB, ..."""
    index = 0
    while True:
        label = ""
        value = index
        while True:
            label = chr(ord("A") + value % 26) + label
            value = value // 26 - 1
            if value < 0:
                break
        yield label
        index += 1


# Global data generator instance
datagen_service = DataGenerator()
