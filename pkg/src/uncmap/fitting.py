"""Laplace maximum-likelihood estimation on raw samples and on map stacks.

The closed form (median location, mean absolute deviation scale) is the
exact minimizer of the Laplace NLL and serves as the oracle for the
gradient-descent fit, which minimizes the same loss numerically over
(mu, log b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CLASS_INDEX, NUM_CLASSES, VectorMap
from .probmap import B_FLOOR, ProbMapElement, ProbVectorMap, nll_loss

# Logit assigned to non-template classes in fitted maps; the template's own
# class gets 0, so the softmax is effectively one-hot.
_OFF_CLASS_LOGIT = -16.0


@dataclass
class FitResult:
    """Outcome of a univariate Laplace fit."""

    mu_hat: float
    b_hat: float
    iterations: int
    final_loss: float
    converged: bool = True
    clamped: bool = False
    loss_trace: np.ndarray | None = None


@dataclass
class FitConfig:
    """Gradient-descent settings for :func:`fit_gradient`."""

    step_size: float = 1.0
    max_iters: int = 10_000
    tol: float = 1e-10
    armijo_c: float = 1e-4
    init_mu: float | None = None
    init_b: float | None = None


def _mean_nll(samples: np.ndarray, mu: float, b: float) -> float:
    return float(np.log(2.0 * b) + np.abs(samples - mu).mean() / b)


def _lower_median(sorted_samples: np.ndarray) -> float:
    """Lower middle order statistic; deterministic for even counts."""
    return float(sorted_samples[(len(sorted_samples) - 1) // 2])


def fit_closed_form(samples) -> FitResult:
    """Exact Laplace MLE: mu = sample median, b = mean |x - mu|.

    Even sample counts use the lower median. All-identical samples would
    give b = 0, so b is clamped to the scale floor and the result flagged.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    mu = _lower_median(np.sort(x))
    b = float(np.abs(x - mu).mean())
    clamped = b < B_FLOOR
    if clamped:
        b = B_FLOOR
    return FitResult(mu, b, iterations=0, final_loss=_mean_nll(x, mu, b),
                     converged=True, clamped=clamped)


def fit_gradient(samples, config: FitConfig | None = None) -> FitResult:
    """Minimize the mean per-sample Laplace NLL by gradient descent.

    Optimizes over (mu, log b) so b stays positive by construction, with a
    backtracking (halving) line search under an Armijo sufficient-decrease
    test. Convergence is declared when an accepted step changes the loss by
    less than ``config.tol``.
    """
    cfg = config or FitConfig()
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if np.all(x == x[0]):
        # NLL is unbounded below in b for identical samples; report the
        # floored closed form instead of iterating.
        res = fit_closed_form(x)
        return FitResult(res.mu_hat, res.b_hat, 0, res.final_loss,
                         converged=True, clamped=True,
                         loss_trace=np.array([res.final_loss]))

    mu = float(np.mean(x)) if cfg.init_mu is None else float(cfg.init_mu)
    b0 = float(np.abs(x - mu).mean()) if cfg.init_b is None else float(cfg.init_b)
    s = np.log(max(b0, B_FLOOR))

    def loss_and_grad(mu_v: float, s_v: float) -> tuple[float, float, float]:
        b_v = np.exp(s_v)
        total, grad_mu, grad_b = nll_loss(np.full_like(x, mu_v), np.full_like(x, b_v), x)
        # chain rule through b = exp(s)
        return total / len(x), float(grad_mu.mean()), float(grad_b.mean()) * b_v

    loss, gmu, gs = loss_and_grad(mu, s)
    trace = [loss]
    iterations = 0
    converged = False
    for _ in range(cfg.max_iters):
        gnorm2 = gmu * gmu + gs * gs
        if gnorm2 == 0.0:
            converged = True
            break
        alpha = cfg.step_size
        accepted = False
        while alpha > 1e-20:
            cand = loss_and_grad(mu - alpha * gmu, s - alpha * gs)
            if cand[0] <= loss - cfg.armijo_c * alpha * gnorm2:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # No step of any length improves the loss: numerically stationary.
            converged = True
            break
        iterations += 1
        delta = loss - cand[0]
        mu, s = mu - alpha * gmu, s - alpha * gs
        loss, gmu, gs = cand
        trace.append(loss)
        if delta < cfg.tol:
            converged = True
            break
    b = float(np.exp(s))
    clamped = b < B_FLOOR
    if clamped:
        b = B_FLOOR
    return FitResult(mu, b, iterations, _mean_nll(x, mu, b),
                     converged=converged, clamped=clamped,
                     loss_trace=np.asarray(trace))


def _one_hot_logits(n_vertices: int, element_class) -> np.ndarray:
    logits = np.full((n_vertices, NUM_CLASSES), _OFF_CLASS_LOGIT)
    logits[:, CLASS_INDEX[element_class]] = 0.0
    return logits


def fit_map(observations: list[VectorMap], template: VectorMap) -> ProbVectorMap:
    """Fit one probabilistic map from repeated observations of a true map.

    Every observation must share the template's element and vertex counts;
    correspondence is positional, so no matching is performed. Each vertex
    coordinate is fitted independently with the closed-form estimator
    (vectorized: lower median and mean absolute deviation, scale floored).
    """
    if not observations:
        raise ValueError("need at least one observation")
    for obs in observations:
        if len(obs.elements) != len(template.elements):
            raise ValueError("observation element count differs from template")
        for oel, tel in zip(obs.elements, template.elements):
            if oel.vertices.shape != tel.vertices.shape:
                raise ValueError("observation vertex counts differ from template")
            if oel.element_class != tel.element_class:
                raise ValueError("observation classes differ from template")

    fitted = []
    for ei, tel in enumerate(template.elements):
        stack = np.stack([obs.elements[ei].vertices for obs in observations])  # (N, V, 2)
        n = len(stack)
        order = np.sort(stack, axis=0)
        mu = order[(n - 1) // 2]
        b = np.maximum(np.abs(stack - mu).mean(axis=0), B_FLOOR)
        fitted.append(ProbMapElement(mu, b, _one_hot_logits(len(mu), tel.element_class),
                                     tel.element_class, tel.confidence, tel.closed))
    return ProbVectorMap(fitted, template.ego_pose, template.perception_range)
