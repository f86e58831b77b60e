"""One-dimensional convex minimization."""
from __future__ import annotations

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, rtol: float = 1e-9, max_iter: int = 500):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    Endpoints are never evaluated, so ``f`` may be infinite there.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if hi - lo <= rtol * max(abs(x1), abs(x2)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)
