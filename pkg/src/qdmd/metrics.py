"""Prediction error measures."""

import numpy as np

from ._validation import as_real_matrix
from .exceptions import ShapeError

__all__ = ["relative_l2_error", "stepwise_percent_error"]


def _pair(pred, truth):
    pred = as_real_matrix(np.atleast_2d(pred), "prediction")
    truth = as_real_matrix(np.atleast_2d(truth), "truth")
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and truth {truth.shape} differ in shape")
    return pred, truth


def relative_l2_error(pred, truth):
    """``||pred - truth||_F / ||truth||_F`` over the whole record."""
    pred, truth = _pair(pred, truth)
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise ZeroDivisionError("reference trajectory is identically zero")
    return float(np.linalg.norm(pred - truth) / denom)


def stepwise_percent_error(pred, truth):
    """Per-sample error ``||x_hat_n - x_n|| / max_n ||x_n||`` in percent (states as columns)."""
    pred, truth = _pair(pred, truth)
    scale = np.max(np.linalg.norm(truth, axis=0))
    if scale == 0:
        raise ZeroDivisionError("reference trajectory is identically zero")
    return 100.0 * np.linalg.norm(pred - truth, axis=0) / scale
