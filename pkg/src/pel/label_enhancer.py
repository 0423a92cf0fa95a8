"""Soft targets: prototype-enhanced labels and the label-smoothing baseline."""

import numpy as np


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"class index out of range [0, {n_classes})")
    return np.eye(n_classes)[labels]


def fuse_labels(y, w, beta=6.0):
    """Return ``beta * y + w``.

    The result is deliberately left unnormalized: it sums to ``beta + 1``.
    Works on single vectors or on ``(B, N)`` batches.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if y.shape != w.shape:
        raise ValueError(f"shape mismatch: labels {y.shape} vs scores {w.shape}")
    return beta * y + w


def smooth_labels(y, epsilon):
    """Mix a one-hot label with the uniform distribution.

    The target class gets ``1 - epsilon + epsilon / N``, every other class
    ``epsilon / N``.
    """
    if not 0.0 <= epsilon < 1.0:
        raise ValueError(f"smoothing epsilon must lie in [0, 1), got {epsilon}")
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[-1]
    return (1.0 - epsilon) * y + epsilon / n
