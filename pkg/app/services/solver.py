"""
Sparse PCA solver: monotone accelerated proximal gradient with
synaptic-intelligence importance accumulation and deflation.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.core.exceptions import DimensionMismatchError, DivergenceError, InvalidArgumentError
from app.schemas.solver import APGResult, PriorTerm, ProjectionFit, SolverConfig, SolverTrace

logger = structlog.get_logger()


def _as_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"data must be an N x m matrix, got shape {X.shape}")
    return X


def _as_vector(p: np.ndarray, m: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (m,):
        raise DimensionMismatchError(f"projection vector must have length {m}, got shape {p.shape}")
    return p


def _active_prior(prior: Optional[PriorTerm], m: int) -> Optional[PriorTerm]:
    """Return the prior if it contributes anything, else None."""
    if prior is None or prior.is_inactive:
        return None
    if prior.anchor.shape != (m,):
        raise DimensionMismatchError(f"prior anchor must have length {m}, got {prior.anchor.shape}")
    return prior


def _smooth_from_gram(
    p: np.ndarray, gram: np.ndarray, trace_gram: float, mu: float, prior: Optional[PriorTerm]
) -> float:
    # ||X - Xpp'||_F^2 = tr(X'X) - 2 p'X'Xp + (p'p)(p'X'Xp)
    pp = float(p @ p)
    pcp = float(p @ gram @ p)
    value = trace_gram - 2.0 * pcp + pp * pcp + mu * (pp - 1.0) ** 2
    if prior is not None:
        d = p - prior.anchor
        value += float(d @ (prior.weights * d))
    return value


def _grad_from_gram(p: np.ndarray, gram: np.ndarray, mu: float, prior: Optional[PriorTerm]) -> np.ndarray:
    gp = 2.0 * (gram @ p + mu * p)
    grad = p * float(p @ gp) + gp * float(p @ p) - 2.0 * gp
    if prior is not None:
        grad = grad + 2.0 * prior.weights * (p - prior.anchor)
    return grad


def soft_threshold(v: np.ndarray, kappa: float) -> np.ndarray:
    """Elementwise shrinkage of v towards zero by kappa."""
    if kappa < 0:
        raise InvalidArgumentError(f"kappa must be nonnegative, got {kappa}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - kappa, 0.0)


def smooth_value(p: np.ndarray, X: np.ndarray, mu: float, prior: Optional[PriorTerm] = None) -> float:
    """Reconstruction error plus the norm penalty and, when given, the prior term."""
    X = _as_matrix(X)
    m = X.shape[1]
    p = _as_vector(p, m)
    gram = X.T @ X
    return _smooth_from_gram(p, gram, float(np.trace(gram)), mu, _active_prior(prior, m))


def objective_value(
    p: np.ndarray, X: np.ndarray, mu: float, lam: float, prior: Optional[PriorTerm] = None
) -> float:
    """Augmented Lagrangian: smooth part plus lam * ||p||_1."""
    return smooth_value(p, X, mu, prior) + lam * float(np.abs(np.asarray(p, dtype=float)).sum())


def grad_p(p: np.ndarray, X: np.ndarray, mu: float, prior: Optional[PriorTerm] = None) -> np.ndarray:
    """Gradient of the smooth part with respect to p."""
    X = _as_matrix(X)
    m = X.shape[1]
    p = _as_vector(p, m)
    return _grad_from_gram(p, X.T @ X, mu, _active_prior(prior, m))


def grad_mu(p: np.ndarray) -> float:
    """Gradient of the smooth part with respect to mu; never negative."""
    p = np.asarray(p, dtype=float)
    return float((p @ p - 1.0) ** 2)


def adaptive_rate(
    alpha: float, t_prev: float, grad: np.ndarray, tau1: float, tau2: float, epsilon: float
) -> float:
    """Adam-style step size from the previous rate and the current gradient."""
    squared_norm = float(np.sum(np.square(grad)))
    return alpha / (math.sqrt((tau2 * t_prev + (1.0 - tau1) * squared_norm) / (1.0 - tau2)) + epsilon)


def prox_step(p: np.ndarray, grad: np.ndarray, t: float, lam: float) -> np.ndarray:
    """Proximal gradient step for the L1 term."""
    if not t > 0:
        raise InvalidArgumentError(f"step size must be positive, got {t}")
    return soft_threshold(np.asarray(p, dtype=float) - t * np.asarray(grad, dtype=float), lam * t)


def normalize_importance(raw: np.ndarray, total_delta: np.ndarray, zeta: float) -> np.ndarray:
    """Scale raw importance by the squared total parameter change and clamp at zero."""
    raw = np.asarray(raw, dtype=float)
    total_delta = np.asarray(total_delta, dtype=float)
    return np.maximum(0.0, raw / (total_delta ** 2 + zeta))


class _TraceRecorder:
    """Collects per-iteration values without building models inside the loop."""

    FIELDS = (
        "objective", "previous_objective", "smooth", "step_y", "step_p",
        "step_mu", "momentum", "mu", "delta_norm", "accepted_z",
    )

    def __init__(self) -> None:
        self.columns = {name: [] for name in self.FIELDS}

    def append(self, **values) -> None:
        for name in self.FIELDS:
            self.columns[name].append(values[name])

    def build(self, converged: bool) -> SolverTrace:
        return SolverTrace(converged=converged, **self.columns)


class SPCASolver:
    """Solver for the per-column sparse PCA problem with a unit-norm augmented Lagrangian."""

    def apg_solve(
        self,
        X: np.ndarray,
        p0: np.ndarray,
        config: SolverConfig,
        prior: Optional[PriorTerm] = None,
    ) -> APGResult:
        """
        Minimize the augmented Lagrangian for one projection vector.

        Two proximal candidates are formed each iteration, one from the
        extrapolated point and one from the current iterate; the one with the
        smaller objective is accepted. The raw importance accumulates
        -grad(p_{k+1}) * (p_{k+1} - p_k) along the trajectory.
        """
        X = _as_matrix(X)
        m = X.shape[1]
        p0 = _as_vector(p0, m)
        prior = _active_prior(prior, m)
        gram = X.T @ X
        trace_gram = float(np.trace(gram))
        lam = config.lambda_

        def rate(alpha: float, t_prev: float, grad: np.ndarray) -> float:
            return adaptive_rate(alpha, t_prev, grad, config.tau1, config.tau2, config.epsilon)

        def objective(p: np.ndarray, mu: float) -> float:
            return _smooth_from_gram(p, gram, trace_gram, mu, prior) + lam * float(np.abs(p).sum())

        def check_finite(k: int, grad: np.ndarray, step: float) -> None:
            if np.all(np.isfinite(grad)) and math.isfinite(step) and step > 0:
                return
            logger.error("apg_diverged", iteration=k, mu=mu, reason="gradient")
            raise DivergenceError(
                f"non-finite gradient at iteration {k}", trace=recorder.build(converged=False)
            )

        mu = config.mu0
        p_prev, p, z = p0.copy(), p0.copy(), p0.copy()
        t_prev, t_cur = 0.0, 0.0
        step_y = step_p = step_mu = config.initial_step
        raw = np.zeros(m)
        grad_at_p = _grad_from_gram(p, gram, mu, prior)
        objective_p = objective(p, mu)
        recorder = _TraceRecorder()
        converged = False

        for k in range(1, config.max_iters + 1):
            if k == 1:
                # t_0 = t_1 = 0 would divide by zero; z_1 = p_1 = p_0 so y_1 = p_1
                y = p.copy()
            else:
                y = p + (t_prev / t_cur) * (z - p) + ((t_prev - 1.0) / t_cur) * (p - p_prev)

            grad_at_y = _grad_from_gram(y, gram, mu, prior)
            step_y = rate(config.alpha_p, step_y, grad_at_y)
            check_finite(k, grad_at_y, step_y)
            z_next = prox_step(y, grad_at_y, step_y, lam)
            objective_z = objective(z_next, mu)

            step_p = rate(config.alpha_p, step_p, grad_at_p)
            check_finite(k, grad_at_p, step_p)
            v_next, objective_v, used_step_p = self._proximal_fallback(
                p, grad_at_p, step_p, lam, objective_p, lambda q: objective(q, mu), config.max_backtracks
            )

            t_next = (math.sqrt(4.0 * t_cur ** 2 + 1.0) + 1.0) / 2.0

            if np.isfinite(objective_v):
                accepted_z = bool(objective_z <= objective_v)
            else:
                accepted_z = bool(np.isfinite(objective_z))
            p_next, objective_next = (z_next, objective_z) if accepted_z else (v_next, objective_v)

            if not (np.isfinite(objective_next) and np.all(np.isfinite(p_next))):
                logger.error("apg_diverged", iteration=k, mu=mu, reason="objective")
                raise DivergenceError(
                    f"non-finite objective at iteration {k}", trace=recorder.build(converged=False)
                )

            previous_mu = mu
            g_mu = grad_mu(p_next)
            step_mu = rate(config.alpha_mu, step_mu, np.array([g_mu]))
            mu = mu + step_mu * g_mu

            grad_next = _grad_from_gram(p_next, gram, mu, prior)
            delta = p_next - p
            raw -= grad_next * delta
            delta_norm = float(np.linalg.norm(delta))

            recorder.append(
                objective=objective_next,
                previous_objective=objective_p,
                smooth=objective_next - lam * float(np.abs(p_next).sum()),
                step_y=step_y,
                step_p=used_step_p,
                step_mu=step_mu,
                momentum=t_cur,
                mu=previous_mu,
                delta_norm=delta_norm,
                accepted_z=accepted_z,
            )

            p_prev, p, z = p, p_next, z_next
            t_prev, t_cur = t_cur, t_next
            grad_at_p = grad_next
            objective_p = objective(p, mu)

            if delta_norm < config.convergence_tolerance:
                converged = True
                break

        trace = recorder.build(converged=converged)
        if not converged:
            logger.warning(
                "apg_max_iters_reached",
                max_iters=config.max_iters,
                last_delta_norm=trace.delta_norm[-1],
            )
        logger.debug(
            "apg_solve_finished",
            iterations=trace.iterations,
            converged=converged,
            objective=objective_p,
            mu=mu,
        )
        return APGResult(projection=p, raw_importance=raw, mu=mu, trace=trace)

    @staticmethod
    def _proximal_fallback(
        p: np.ndarray,
        grad: np.ndarray,
        step: float,
        lam: float,
        objective_p: float,
        objective: Callable[[np.ndarray], float],
        max_backtracks: int,
    ) -> Tuple[np.ndarray, float, float]:
        """Proximal step from p, halving the step until the objective does not increase."""
        for _ in range(max_backtracks + 1):
            candidate = prox_step(p, grad, step, lam)
            value = objective(candidate)
            if value <= objective_p:
                return candidate, value, step
            step *= 0.5
        return p.copy(), objective_p, 0.0

    def fit_projection(
        self,
        X: np.ndarray,
        n_components: int,
        config: SolverConfig,
        priors: Optional[Sequence[PriorTerm]] = None,
    ) -> ProjectionFit:
        """Extract n_components sparse projection vectors one at a time by deflation."""
        X = _as_matrix(X)
        m = X.shape[1]
        if not 1 <= n_components <= m:
            raise InvalidArgumentError(f"number of components must be in [1, {m}], got {n_components}")
        if priors is not None and len(priors) != n_components:
            raise DimensionMismatchError(f"expected {n_components} prior terms, got {len(priors)}")

        start = np.eye(m, n_components)
        projection = np.zeros((m, n_components))
        importance = np.zeros((m, n_components))
        raw_importance = np.zeros((m, n_components))
        final_mu: List[float] = []
        traces: List[SolverTrace] = []
        residual = X.copy()

        for j in range(n_components):
            p0 = start[:, j]
            prior = priors[j] if priors is not None else None
            try:
                result = self.apg_solve(residual, p0, config, prior)
            except DivergenceError as exc:
                logger.error("projection_fit_diverged", column=j + 1)
                raise exc.with_column(j + 1) from exc

            p = result.projection
            projection[:, j] = p
            raw_importance[:, j] = result.raw_importance
            importance[:, j] = normalize_importance(result.raw_importance, p - p0, config.zeta)
            final_mu.append(result.mu)
            traces.append(result.trace)
            residual = residual - np.outer(residual @ p, p)

            logger.debug(
                "component_fitted",
                column=j + 1,
                iterations=result.trace.iterations,
                converged=result.trace.converged,
                norm_gap=abs(float(p @ p) - 1.0),
                zero_loadings=int(np.count_nonzero(p == 0.0)),
            )

        return ProjectionFit(
            projection=projection,
            importance=importance,
            raw_importance=raw_importance,
            final_mu=final_mu,
            traces=traces,
        )


# Global solver service instance
solver_service = SPCASolver()
