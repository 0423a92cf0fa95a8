"""Numerical primitives shared by the model, the prototype bank and the trainer.

Everything here works in float64 and accepts either a single vector or a
batch of row vectors (the last axis is the class / feature axis).
"""

import numpy as np

PROB_EPS = 1e-12


def _as_float(a, name):
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries: {arr}")
    return arr


def tempered_softmax(z, t=1.0):
    """Softmax of ``z / t`` along the last axis.

    The row maximum is subtracted before exponentiation, which leaves the
    result unchanged and keeps ``exp`` from overflowing.

    Args:
        z: logits, shape ``(N,)`` or ``(B, N)``. Must be finite.
        t: temperature, strictly positive.

    Returns:
        Array of the same shape whose rows lie on the probability simplex.
    """
    if not t > 0:
        raise ValueError(f"temperature must be positive, got {t}")
    z = _as_float(z, "logits")
    s = z / t
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def log_tempered_softmax(z, t=1.0):
    if not t > 0:
        raise ValueError(f"temperature must be positive, got {t}")
    z = _as_float(z, "logits")
    s = z / t
    s = s - s.max(axis=-1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def l2_normalize(v):
    """Scale ``v`` (or each row of ``v``) to unit Euclidean norm.

    A zero vector has no direction, so it raises instead of returning zeros.
    """
    v = _as_float(v, "vector")
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def _clamp(p):
    return np.clip(p, PROB_EPS, 1.0)


def _check_pair(y, yhat):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape:
        raise ValueError(f"shape mismatch: target {y.shape} vs prediction {yhat.shape}")
    return y, yhat


def cross_entropy(y, yhat):
    """``-sum_j y_j log yhat_j`` with ``yhat`` clamped to ``[1e-12, 1]``.

    Batched input returns one value per row.
    """
    y, yhat = _check_pair(y, yhat)
    return -(y * np.log(_clamp(yhat))).sum(axis=-1)


def kl_loss(ytilde, yhat):
    """``sum_j ytilde_j log(ytilde_j / yhat_j)`` with ``0 log 0 = 0``.

    ``ytilde`` is not required to sum to one; an enhanced target summing to
    ``beta + 1`` is scored exactly as written. ``yhat`` is clamped to
    ``[1e-12, 1]`` before the log.
    """
    ytilde, yhat = _check_pair(ytilde, yhat)
    if np.any(ytilde < 0):
        raise ValueError("target distribution has negative entries")
    pos = ytilde > 0
    safe = np.where(pos, ytilde, 1.0)
    terms = np.where(pos, ytilde * (np.log(safe) - np.log(_clamp(yhat))), 0.0)
    return terms.sum(axis=-1)
