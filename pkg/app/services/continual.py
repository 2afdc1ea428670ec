"""
Continual updater: trains the first-mode model and updates it mode by mode
without access to earlier data.
"""

from typing import List, Optional, Tuple

import numpy as np
import structlog

from app.core.exceptions import DimensionMismatchError, InsufficientDataError, InvalidArgumentError
from app.schemas.model import ModeData, ModeModel, Scaler
from app.schemas.solver import PriorTerm, ProjectionFit, SolverConfig
from app.services.monitor import monitor_service
from app.services.solver import solver_service

logger = structlog.get_logger()


def accumulate_importance(prev_acc: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Elementwise sum of accumulated and new importance."""
    prev_acc = np.asarray(prev_acc, dtype=float)
    new = np.asarray(new, dtype=float)
    if prev_acc.shape != new.shape:
        raise DimensionMismatchError(
            f"importance shapes disagree: {prev_acc.shape} vs {new.shape}"
        )
    return prev_acc + new


class ContinualUpdater:
    """Service for building and extending a chain of mode models."""

    def train_first_mode(
        self,
        data: ModeData,
        config: SolverConfig,
        cpv_threshold: float,
        confidence: float = 0.99,
        n_components: Optional[int] = None,
    ) -> ModeModel:
        """Train the model of the first mode; l comes from CPV unless given."""
        if data.mode_index != 1:
            raise InvalidArgumentError(f"first-mode training needs mode_index 1, got {data.mode_index}")
        self._check_sample_count(data)

        scaler = monitor_service.fit_scaler(data.samples)
        Z = monitor_service.apply_scaler(data.samples, scaler)
        if n_components is None:
            n_components = monitor_service.select_num_components(Z, cpv_threshold)

        logger.info("training_first_mode", n_samples=data.n_samples, n_components=n_components)
        fit = solver_service.fit_projection(Z, n_components, config)
        self._check_norms(fit, config, mode_index=1)

        xi = monitor_service.compute_xi(fit.projection, Z, 1.0)
        t2_threshold, spe_threshold = self._thresholds(Z, fit.projection, xi, confidence)

        return ModeModel(
            mode_index=1,
            projection=fit.projection,
            importance=fit.importance,
            accumulated_importance=fit.importance,
            xi=xi,
            scaler=scaler,
            t2_threshold=t2_threshold,
            spe_threshold=spe_threshold,
            n_components=n_components,
            eta=1.0,
            gamma=0.0,
            confidence=confidence,
        )

    def update_model(
        self,
        previous: ModeModel,
        data: ModeData,
        config: SolverConfig,
        gamma: float,
        eta: float,
        confidence: Optional[float] = None,
        n_components: Optional[int] = None,
        rescale_variance: bool = False,
    ) -> ModeModel:
        """
        Fit the next mode's model from the previous model and the new data only.

        Each column is anchored to the previous column with weights
        gamma times the accumulated importance; l is inherited. The new data
        are centered on their own mean. While anything is carried over
        (gamma > 0 or eta < 1) they keep the previous model's variance
        scaling so that anchors and the blended xi share one coordinate
        system; rescale_variance standardizes them by their own variances
        instead.
        """
        if data.mode_index != previous.mode_index + 1:
            raise InvalidArgumentError(
                f"expected data for mode {previous.mode_index + 1}, got mode {data.mode_index}"
            )
        if not 0 <= eta <= 1:
            raise InvalidArgumentError(f"eta must be in [0, 1], got {eta}")
        if not gamma >= 0:
            raise InvalidArgumentError(f"gamma must be nonnegative, got {gamma}")
        if data.n_variables != previous.n_variables:
            raise DimensionMismatchError(
                f"data has {data.n_variables} variables, previous model has {previous.n_variables}"
            )
        if n_components is not None and n_components != previous.n_components:
            raise DimensionMismatchError(
                f"component count is inherited ({previous.n_components}), got {n_components}"
            )
        self._check_sample_count(data)

        if gamma == 0 and eta == 1:
            logger.warning(
                "catastrophic_forgetting_configuration",
                mode_index=data.mode_index,
                gamma=gamma,
                eta=eta,
            )

        confidence = previous.confidence if confidence is None else confidence
        scaler = monitor_service.fit_scaler(data.samples)
        shared_scale = not rescale_variance and (gamma > 0 or eta < 1)
        if shared_scale:
            scaler = Scaler(mean=scaler.mean, std=previous.scaler.std)
        Z = monitor_service.apply_scaler(data.samples, scaler)
        priors: List[PriorTerm] = [
            PriorTerm(
                anchor=previous.projection[:, j],
                weights=gamma * previous.accumulated_importance[:, j],
            )
            for j in range(previous.n_components)
        ]

        logger.info(
            "updating_model",
            mode_index=data.mode_index,
            n_samples=data.n_samples,
            n_components=previous.n_components,
            gamma=gamma,
            eta=eta,
            shared_scale=shared_scale,
        )
        fit = solver_service.fit_projection(Z, previous.n_components, config, priors)
        self._check_norms(fit, config, mode_index=data.mode_index)

        xi = monitor_service.compute_xi(fit.projection, Z, eta, previous.projection, previous.xi)
        t2_threshold, spe_threshold = self._thresholds(Z, fit.projection, xi, confidence)

        return ModeModel(
            mode_index=data.mode_index,
            projection=fit.projection,
            importance=fit.importance,
            accumulated_importance=accumulate_importance(previous.accumulated_importance, fit.importance),
            xi=xi,
            scaler=scaler,
            t2_threshold=t2_threshold,
            spe_threshold=spe_threshold,
            n_components=previous.n_components,
            eta=eta,
            gamma=gamma,
            confidence=confidence,
        )

    @staticmethod
    def _check_sample_count(data: ModeData) -> None:
        if data.n_samples <= data.n_variables:
            raise InsufficientDataError(
                f"mode {data.mode_index} has {data.n_samples} samples for {data.n_variables} variables"
            )

    @staticmethod
    def _check_norms(fit: ProjectionFit, config: SolverConfig, mode_index: int) -> None:
        gaps = np.abs(np.sum(fit.projection ** 2, axis=0) - 1.0)
        for column in np.flatnonzero(gaps > config.norm_tolerance):
            logger.warning(
                "norm_constraint_violated",
                mode_index=mode_index,
                column=int(column) + 1,
                norm_gap=float(gaps[column]),
            )

    @staticmethod
    def _thresholds(Z: np.ndarray, P: np.ndarray, xi: np.ndarray, confidence: float) -> Tuple[float, float]:
        t2 = monitor_service.t2_statistics(Z, P, xi)
        spe = monitor_service.spe_statistics(Z, P)
        return (
            monitor_service.kde_threshold(t2, confidence),
            monitor_service.kde_threshold(spe, confidence),
        )


# Global continual updater instance
continual_updater = ContinualUpdater()
