"""Value and derivative losses, their combination, and gradient surgery.

The value loss averages squared residuals over query points and then
over samples; the derivative loss additionally averages over the input
dimensions, so magnitudes stay comparable across resolutions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BothZeroError, ShapeMismatchError, ZeroTargetNormError


def _check_same_shape(pred, target):
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"prediction {pred.shape} vs target {target.shape}")
    return pred, target


def l2_loss(pred, target) -> float:
    """Mean over samples of the per-sample mean squared value residual."""
    pred, target = _check_same_shape(pred, target)
    return float(np.mean((pred - target) ** 2))


def der_loss(pred_grad, target_grad) -> float:
    """Mean squared derivative residual, averaged over the components too."""
    pred_grad, target_grad = _check_same_shape(pred_grad, target_grad)
    return float(np.mean((pred_grad - target_grad) ** 2))


def sobolev_loss(l2: float, der: float, der_weight: float = 1.0) -> float:
    """Combined objective: value loss plus (weighted) derivative loss."""
    return float(l2) + der_weight * float(der)


def relative_l2_error(pred, target) -> float:
    """Mean over samples of ||pred_i - target_i||_2 / ||target_i||_2."""
    pred, target = _check_same_shape(pred, target)
    pred = np.atleast_2d(pred)
    target = np.atleast_2d(target)
    norms = np.linalg.norm(target, axis=-1)
    if np.any(norms == 0.0):
        raise ZeroTargetNormError("a target function is identically zero")
    return float(np.mean(np.linalg.norm(pred - target, axis=-1) / norms))


@dataclass(frozen=True)
class GradientPair:
    """The two task gradients and their merge after conflict projection."""

    g1: np.ndarray
    g2: np.ndarray
    merged: np.ndarray

    @property
    def in_conflict(self) -> bool:
        return bool(np.dot(self.g1, self.g2) < 0.0)


def pcgrad_merge(g1, g2) -> GradientPair:
    """Merge two task gradients, projecting out any conflicting component.

    Without conflict (g1 . g2 >= 0) the merge is the plain sum.  In
    conflict, each gradient loses its projection onto the other before
    summing, so the merge has nonnegative inner product with both tasks.
    """
    g1 = np.asarray(g1, dtype=float)
    g2 = np.asarray(g2, dtype=float)
    if g1.shape != g2.shape:
        raise ShapeMismatchError(f"gradient shapes differ: {g1.shape} vs {g2.shape}")
    if not (np.any(g1) or np.any(g2)):
        raise BothZeroError("both task gradients are zero")
    dot = float(np.dot(g1, g2))
    if dot >= 0.0:
        return GradientPair(g1=g1, g2=g2, merged=g1 + g2)
    # conflict implies both are nonzero; normalize by the largest entry so
    # squared norms cannot underflow or overflow
    u1 = g1 / np.abs(g1).max()
    u2 = g2 / np.abs(g2).max()
    g1_proj = g1 - (float(np.dot(u2, g1)) / float(np.dot(u2, u2))) * u2
    g2_proj = g2 - (float(np.dot(u1, g2)) / float(np.dot(u1, u1))) * u1
    return GradientPair(g1=g1, g2=g2, merged=g1_proj + g2_proj)
