"""Classification risk metrics.

Local risk is the per-node misclassification fraction on held-out test
samples; global risk pools every node's test samples, which equals the
test-size-weighted mean of the local risks.
"""

from dataclasses import dataclass, field

import numpy as np


class MetricError(ValueError):
    pass


def _check_labels(y, name):
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.shape[0] < 1:
        raise MetricError(f"{name} must be a non-empty vector")
    if not np.all(np.isin(y, (1.0, -1.0))):
        raise MetricError(f"{name} entries must be +1 or -1")
    return y


def local_risk(true_labels, predicted_labels) -> float:
    """Misclassification fraction (1/N) * sum |y - yhat| / 2."""
    y = _check_labels(true_labels, "true_labels")
    yhat = _check_labels(predicted_labels, "predicted_labels")
    if y.shape != yhat.shape:
        raise MetricError("label vectors must have equal length")
    return float(np.mean(0.5 * np.abs(y - yhat)))


def global_risk(label_pairs) -> float:
    """Pooled misclassification fraction over per-node (true, predicted) pairs."""
    if not label_pairs:
        raise MetricError("need at least one node")
    errors = 0.0
    total = 0
    for y, yhat in label_pairs:
        y = _check_labels(y, "true_labels")
        yhat = _check_labels(yhat, "predicted_labels")
        if y.shape != yhat.shape:
            raise MetricError("label vectors must have equal length")
        errors += float(np.sum(0.5 * np.abs(y - yhat)))
        total += y.shape[0]
    return errors / total


@dataclass
class RiskReport:
    """Risk snapshot at one iteration."""

    per_node: dict
    global_risk: float
    iteration: int = 0
    consensus_residual: float = float("nan")
    flags: dict = field(default_factory=dict)
