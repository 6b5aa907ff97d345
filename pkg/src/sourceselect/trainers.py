"""Deterministic model trainers.

Both trainers operate on the design matrix exactly as given (callers add
an intercept column and standardize beforehand). The logistic trainer is
full-batch gradient descent from a zero start; the linear trainer solves
the ridge normal equations. Neither consumes randomness, so identical
inputs always produce identical weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonBinaryLabels, SingularSystem


@dataclass(frozen=True)
class TrainerConfig:
    """Settings for the two trainers.

    ``logistic`` pairs with classification/fairness tasks, ``linear`` with
    regression. The iteration fields only matter for the logistic trainer.
    """

    kind: str = "logistic"
    max_iterations: int = 500
    step_size: float = 0.1
    gradient_tolerance: float = 1e-6
    ridge: float = 1e-4
    standardize: bool = True

    def __post_init__(self):
        if self.kind not in ("logistic", "linear"):
            raise ValueError(f"unknown trainer kind {self.kind!r}")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be > 0")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")

    @classmethod
    def for_task(cls, task_kind: str, **overrides) -> "TrainerConfig":
        if task_kind == "regression":
            defaults = dict(kind="linear", ridge=1e-8)
        else:
            defaults = dict(kind="logistic", ridge=1e-4)
        defaults.update(overrides)
        return cls(**defaults)


def standardize_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and scales from a training split.

    Zero-variance columns get scale 1 so they pass through unchanged.
    """
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return mean, scale


def apply_standardize(X: np.ndarray, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (X - mean) / scale


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(w: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float) -> float:
    """Mean cross-entropy plus 0.5*ridge*||w||^2."""
    z = X @ w
    # log(1 + exp(z)) - y*z, computed stably
    ce = np.logaddexp(0.0, z) - y * z
    return float(ce.mean() + 0.5 * ridge * w @ w)


def logistic_gradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    p = sigmoid(X @ w)
    return X.T @ (p - y) / X.shape[0] + ridge * w


def fit_logistic(X: np.ndarray, y: np.ndarray, cfg: TrainerConfig) -> np.ndarray:
    """Full-batch gradient descent on L2-regularized logistic loss.

    Starts from zero weights and stops when the gradient norm drops to
    ``gradient_tolerance`` or after ``max_iterations`` steps.
    """
    if not np.isin(y, (0.0, 1.0)).all():
        raise NonBinaryLabels("logistic trainer requires labels in {0, 1}")
    w = np.zeros(X.shape[1])
    for _ in range(cfg.max_iterations):
        grad = logistic_gradient(w, X, y, cfg.ridge)
        if np.linalg.norm(grad) <= cfg.gradient_tolerance:
            break
        w = w - cfg.step_size * grad
    return w


def fit_linear(X: np.ndarray, y: np.ndarray, cfg: TrainerConfig) -> np.ndarray:
    """Solve the ridge normal equations (X'X + ridge*I) w = X'y."""
    gram = X.T @ X
    if cfg.ridge == 0.0 and np.linalg.matrix_rank(gram) < gram.shape[0]:
        raise SingularSystem(
            "Gram matrix is rank-deficient with ridge=0; set ridge > 0"
        )
    if cfg.ridge:
        gram = gram + cfg.ridge * np.eye(gram.shape[0])
    return np.linalg.solve(gram, X.T @ y)
