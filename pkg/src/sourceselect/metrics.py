"""Task-quality metrics and their mappings onto the 0-100 gain scale."""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, NoPositives, ZeroBaseline


def _check_lengths(pred, true) -> None:
    if len(pred) != len(true):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(true)} labels")
    if len(pred) == 0:
        raise EmptyInput("metric called on zero predictions")


def accuracy(pred: np.ndarray, true: np.ndarray) -> float:
    """Percentage of matching predictions, in [0, 100]."""
    _check_lengths(pred, true)
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(true)))


def tpr_gap(pred: np.ndarray, true: np.ndarray, sensitive: np.ndarray) -> float:
    """True-positive-rate difference, protected group (a=0) minus
    privileged group (a=1). Negative values favor the privileged group.
    """
    _check_lengths(pred, true)
    pred = np.asarray(pred)
    true = np.asarray(true)
    sensitive = np.asarray(sensitive)
    rates = {}
    for group in (0, 1):
        positives = (sensitive == group) & (true == 1)
        if not positives.any():
            raise NoPositives(group)
        rates[group] = float(np.mean(pred[positives] == 1))
    return rates[0] - rates[1]


def fairness_gain(acc: float, gap: float, lam: float) -> float:
    """Combined accuracy/fairness score acc + lam*gap, clamped to [0, 100]."""
    return float(min(100.0, max(0.0, acc + lam * gap)))


def mse(pred: np.ndarray, true: np.ndarray) -> float:
    """Mean squared prediction error."""
    _check_lengths(pred, true)
    diff = np.asarray(true, dtype=float) - np.asarray(pred, dtype=float)
    return float(np.mean(diff * diff))


def regression_gain(model_mse: float, baseline_mse: float) -> float:
    """Map an MSE onto [0, 100]: 100 at zero error, 0 at (or beyond) the
    mean-predictor baseline."""
    if baseline_mse <= 0.0:
        raise ZeroBaseline("baseline MSE must be > 0 (constant test labels?)")
    return 100.0 * float(min(1.0, max(0.0, 1.0 - model_mse / baseline_mse)))
