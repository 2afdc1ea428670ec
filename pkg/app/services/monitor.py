"""
Monitoring service: standardization, component selection, T2/SPE statistics,
KDE control limits and detection scoring.
"""

from typing import Optional

import numpy as np
import structlog
from scipy.optimize import bisect
from scipy.special import ndtr

from app.core.exceptions import (
    DegenerateDataError,
    DimensionMismatchError,
    InsufficientDataError,
    InvalidArgumentError,
    SingularMatrixError,
)
from app.schemas.model import ModeModel, Scaler
from app.schemas.monitoring import DetectionScore, MonitoringResult

logger = structlog.get_logger()

CPV_TOLERANCE = 1e-10
XI_CONDITION_LIMIT = 1e12
XI_RIDGE_SCALE = 1e-8
KDE_MIN_SAMPLES = 30


def _as_matrix(X: np.ndarray, name: str = "data") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a 2-D matrix, got shape {X.shape}")
    return X


class MonitorService:
    """Service for process monitoring statistics and control limits."""

    def fit_scaler(self, X: np.ndarray) -> Scaler:
        """Per-variable mean and sample standard deviation."""
        X = _as_matrix(X)
        if X.shape[0] < 2:
            raise InsufficientDataError(f"at least 2 samples are needed to fit a scaler, got {X.shape[0]}")

        mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1)
        bad = np.flatnonzero(~(np.isfinite(std) & (std > 0)))
        if bad.size:
            column = f"x{bad[0] + 1}"
            logger.error("degenerate_column", column=column)
            raise DegenerateDataError(f"column {column} has zero or non-finite variance", column=column)

        return Scaler(mean=mean, std=std)

    def apply_scaler(self, X: np.ndarray, scaler: Scaler) -> np.ndarray:
        """Standardize X with a fitted scaler."""
        X = _as_matrix(X)
        if X.shape[1] != scaler.n_variables:
            raise DimensionMismatchError(
                f"data has {X.shape[1]} variables, scaler expects {scaler.n_variables}"
            )
        return (X - scaler.mean) / scaler.std

    def select_num_components(self, X: np.ndarray, cpv_threshold: float) -> int:
        """Smallest l whose leading eigenvalues explain at least cpv_threshold of the variance."""
        X = _as_matrix(X)
        if not 0 < cpv_threshold <= 1:
            raise InvalidArgumentError(f"CPV threshold must be in (0, 1], got {cpv_threshold}")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("data contains non-finite values")
        if X.shape[0] < 2:
            raise InsufficientDataError("at least 2 samples are needed to select components")

        covariance = np.atleast_2d(np.cov(X, rowvar=False))
        eigenvalues = np.clip(np.linalg.eigvalsh(covariance)[::-1], 0.0, None)
        total = eigenvalues.sum()
        if not total > 0:
            raise DegenerateDataError("data has no variance")

        ratios = np.cumsum(eigenvalues) / total
        n_components = int(np.argmax(ratios >= cpv_threshold - CPV_TOLERANCE)) + 1
        logger.debug("components_selected", n_components=n_components, cpv=float(ratios[n_components - 1]))
        return n_components

    def compute_xi(
        self,
        P: np.ndarray,
        X: np.ndarray,
        eta: float,
        prev_P: Optional[np.ndarray] = None,
        prev_xi: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        """Score covariance blended with the previous mode's summary."""
        P = _as_matrix(P, "projection")
        X = _as_matrix(X)
        if not 0 <= eta <= 1:
            raise InvalidArgumentError(f"eta must be in [0, 1], got {eta}")
        if X.shape[1] != P.shape[0]:
            raise DimensionMismatchError(f"data has {X.shape[1]} variables, projection has {P.shape[0]} rows")
        if X.shape[0] < 2:
            raise InsufficientDataError("at least 2 samples are needed to compute xi")

        covariance = X.T @ X / (X.shape[0] - 1)
        if eta == 1.0:
            inner = covariance
        else:
            if prev_P is None or prev_xi is None:
                raise InvalidArgumentError("eta < 1 requires the previous projection and xi")
            prev_P = _as_matrix(prev_P, "previous projection")
            prev_xi = _as_matrix(prev_xi, "previous xi")
            if prev_P.shape[0] != P.shape[0] or prev_xi.shape != (prev_P.shape[1], prev_P.shape[1]):
                raise DimensionMismatchError("previous projection and xi shapes disagree")
            inner = eta * covariance + (1.0 - eta) * (prev_P @ prev_xi @ prev_P.T)

        xi = P.T @ inner @ P
        return 0.5 * (xi + xi.T)

    def _conditioned_xi(self, xi: np.ndarray) -> np.ndarray:
        xi = _as_matrix(xi, "xi")
        if xi.shape[0] != xi.shape[1]:
            raise DimensionMismatchError(f"xi must be square, got shape {xi.shape}")
        condition = np.linalg.cond(xi)
        if np.isfinite(condition) and condition <= XI_CONDITION_LIMIT:
            return xi

        ridge = XI_RIDGE_SCALE * float(np.trace(xi)) / xi.shape[0]
        if not (np.isfinite(ridge) and ridge > 0):
            raise SingularMatrixError("xi is singular and cannot be regularized")
        logger.warning("xi_regularized", condition=float(condition), ridge=ridge)
        return xi + ridge * np.eye(xi.shape[0])

    def t2_statistics(self, Z: np.ndarray, P: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """T2 for every row of the standardized matrix Z."""
        Z = _as_matrix(Z)
        P = _as_matrix(P, "projection")
        if Z.shape[1] != P.shape[0]:
            raise DimensionMismatchError(f"samples have {Z.shape[1]} variables, projection has {P.shape[0]} rows")
        xi = self._conditioned_xi(xi)
        if xi.shape[0] != P.shape[1]:
            raise DimensionMismatchError(f"xi must be {P.shape[1]} x {P.shape[1]}")

        scores = Z @ P
        try:
            solved = np.linalg.solve(xi, scores.T).T
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"xi could not be inverted: {exc}") from exc
        return np.maximum(np.sum(scores * solved, axis=1), 0.0)

    def t2_statistic(self, x: np.ndarray, P: np.ndarray, xi: np.ndarray) -> float:
        """T2 of a single standardized sample."""
        return float(self.t2_statistics(np.atleast_2d(np.asarray(x, dtype=float)), P, xi)[0])

    def spe_statistics(self, Z: np.ndarray, P: np.ndarray) -> np.ndarray:
        """SPE for every row of the standardized matrix Z."""
        Z = _as_matrix(Z)
        P = _as_matrix(P, "projection")
        if Z.shape[1] != P.shape[0]:
            raise DimensionMismatchError(f"samples have {Z.shape[1]} variables, projection has {P.shape[0]} rows")
        # x'(I - PP')x without forming the m x m matrix
        scores = Z @ P
        return np.maximum(np.sum(Z * Z, axis=1) - np.sum(scores * scores, axis=1), 0.0)

    def spe_statistic(self, x: np.ndarray, P: np.ndarray) -> float:
        """SPE of a single standardized sample."""
        return float(self.spe_statistics(np.atleast_2d(np.asarray(x, dtype=float)), P)[0])

    def kde_threshold(self, values: np.ndarray, confidence: float) -> float:
        """Control limit where the Gaussian-kernel CDF of values reaches confidence."""
        values = np.asarray(values, dtype=float).ravel()
        if not 0 < confidence < 1:
            raise InvalidArgumentError(f"confidence must be in (0, 1), got {confidence}")
        if values.size < KDE_MIN_SAMPLES:
            raise InsufficientDataError(
                f"at least {KDE_MIN_SAMPLES} samples are needed for a KDE threshold, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidArgumentError("statistic values contain non-finite entries")

        # Silverman's rule of thumb
        bandwidth = 1.06 * values.std(ddof=1) * values.size ** (-0.2)
        if not bandwidth > 0:
            return float(values[0])

        def cdf_gap(c: float) -> float:
            return float(np.mean(ndtr((c - values) / bandwidth))) - confidence

        lower = float(values.min())
        if cdf_gap(lower) >= 0:
            return lower
        upper = float(values.max()) + 10.0 * bandwidth
        return float(bisect(cdf_gap, lower, upper, maxiter=200))

    def run_monitoring(
        self, X_test: np.ndarray, model: ModeModel, scaler: Optional[Scaler] = None
    ) -> MonitoringResult:
        """Scale raw samples and evaluate both statistics against the model's limits."""
        X_test = _as_matrix(X_test, "test data")
        if X_test.shape[1] != model.n_variables:
            raise DimensionMismatchError(
                f"test data has {X_test.shape[1]} variables, model expects {model.n_variables}"
            )

        Z = self.apply_scaler(X_test, scaler or model.scaler)
        t2 = self.t2_statistics(Z, model.projection, model.xi)
        spe = self.spe_statistics(Z, model.projection)
        alarms = (t2 > model.t2_threshold) | (spe > model.spe_threshold)

        logger.info(
            "monitoring_completed",
            mode_index=model.mode_index,
            n_samples=int(X_test.shape[0]),
            alarm_rate=float(alarms.mean()) if alarms.size else 0.0,
        )
        return MonitoringResult(
            t2=t2,
            spe=spe,
            t2_threshold=model.t2_threshold,
            spe_threshold=model.spe_threshold,
            alarms=alarms,
        )

    def score_detection(self, result: MonitoringResult, fault_start: int) -> DetectionScore:
        """FDR over rows from fault_start on, FAR over the rows before it."""
        n_samples = result.n_samples
        if not 0 <= fault_start <= n_samples:
            raise InvalidArgumentError(f"fault start must be in [0, {n_samples}], got {fault_start}")

        normal = result.alarms[:fault_start]
        faulty = result.alarms[fault_start:]
        return DetectionScore(
            fdr=float(faulty.mean()) if faulty.size else 0.0,
            far=float(normal.mean()) if normal.size else 0.0,
            fault_start_index=fault_start,
        )


# Global monitor service instance
monitor_service = MonitorService()
