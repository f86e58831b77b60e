"""Principal branch of the Lambert W function for real arguments."""
from __future__ import annotations

import math

import numpy as np

_INV_E = math.exp(-1.0)
# arguments this close below -1/e are treated as the branch point (float rounding of -1/e)
_BRANCH_SLACK = 1e-15


def _initial_guess(x: float) -> float:
    if x < -0.25:
        # series about the branch point in p = sqrt(2(e x + 1))
        p = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if x < 3.0:
        return math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    lx = math.log(x)
    return lx - math.log(lx) + math.log(lx) / lx


def _w0_scalar(x: float) -> float:
    if math.isnan(x):
        return math.nan
    if x < -_INV_E:
        if x < -_INV_E - _BRANCH_SLACK:
            raise ValueError(f"lambert_w0 undefined for x < -1/e (got {x!r})")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = _initial_guess(x)
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        # Halley step
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_next = max(w - dw, -1.0)
        if abs(w_next - w) <= 1e-15 * (1.0 + abs(w_next)):
            w = w_next
            break
        w = w_next
    return w


def lambert_w0(x):
    """Return ``w >= -1`` with ``w * exp(w) = x`` for ``x >= -1/e``.

    Scalars give a float, arrays an array of the same shape.
    """
    if np.ndim(x) == 0:
        return _w0_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.fromiter((_w0_scalar(v) for v in arr.ravel()), float, arr.size).reshape(arr.shape)
