"""Training objectives and their gradients with respect to the network output.

Every loss returns ``(value, gradient)`` where ``gradient`` has the shape of
the predictions it was given.
"""

from __future__ import annotations

import numpy as np

from .bucketing import BucketScheme
from .errors import InputError


def _labels(labels, K: int) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if arr.dtype == object or not np.all(arr == np.round(arr)):
            raise InputError("labels must be integers")
    arr = arr.astype(np.int64)
    if np.any(arr < 0) or np.any(arr >= K):
        raise InputError(f"labels must lie in [0, {K - 1}]")
    return arr


def atmsel(yhat, labels, scheme: BucketScheme):
    """Mean squared distance of each prediction from the midpoint of its true bucket."""
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    labels = _labels(labels, scheme.K).ravel()
    if yhat.size == 0:
        raise InputError("empty batch")
    if yhat.shape != labels.shape:
        raise InputError(f"{yhat.size} predictions for {labels.size} labels")
    diff = yhat - scheme.midpoint_array[labels]
    n = yhat.size
    return float(np.mean(diff * diff)), 2.0 * diff / n


def mse_loss(yhat, y):
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if yhat.size == 0:
        raise InputError("empty batch")
    if yhat.shape != y.shape:
        raise InputError(f"{yhat.size} predictions for {y.size} targets")
    diff = yhat - y
    return float(np.mean(diff * diff)), 2.0 * diff / yhat.size


def coral_encode(label: int, K: int) -> np.ndarray:
    """Extended binary target: entry ``k`` is 1 iff ``label > k``."""
    (label,) = _labels([label], K)
    return (np.arange(K - 1) < label).astype(np.int64)


def coral_encode_batch(labels, K: int) -> np.ndarray:
    labels = _labels(labels, K).ravel()
    return (np.arange(K - 1)[None, :] < labels[:, None]).astype(np.float64)


def coral_decode(probs, K: int | None = None) -> int:
    """Count of leading 1-bits after thresholding at ``> 0.5``.

    ``[1, 0, 1, 0]`` decodes to 1: counting stops at the first 0.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1:
        raise InputError("coral_decode takes one probability vector")
    return int(coral_decode_batch(probs[None, :], K)[0])


def coral_decode_batch(probs, K: int | None = None) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2:
        raise InputError("expected a (n, K-1) probability matrix")
    if K is not None and probs.shape[1] != K - 1:
        raise InputError(f"expected {K - 1} probabilities, got {probs.shape[1]}")
    if not np.all((probs >= 0.0) & (probs <= 1.0)):
        raise InputError("probabilities must lie in [0, 1]")
    bits = probs > 0.5
    # index of the first 0-bit; all-ones rows decode to K-1
    leading = np.where(bits.all(axis=1), bits.shape[1], np.argmin(bits, axis=1))
    return leading.astype(np.int64)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def coral_loss(logits, labels, K: int):
    """Binary cross-entropy averaged over instances and the K-1 threshold tasks.

    Uses ``BCE(z, t) = softplus(z) - t*z`` so saturated logits never overflow.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] != K - 1:
        raise InputError(f"logits must have shape (n, {K - 1}), got {logits.shape}")
    if logits.shape[0] == 0:
        raise InputError("empty batch")
    targets = coral_encode_batch(labels, K)
    if targets.shape[0] != logits.shape[0]:
        raise InputError(f"{logits.shape[0]} logit rows for {targets.shape[0]} labels")
    per = np.logaddexp(0.0, logits) - targets * logits
    denom = logits.size
    return float(per.sum() / denom), (sigmoid(logits) - targets) / denom
