"""Quantization-error tolerance per global round."""
from __future__ import annotations

from typing import Callable


def epsilon_schedule(kind: str, eps0: float, eps_end: float | None = None, rounds: int | None = None,
                     ratio: float | None = None) -> Callable[[int], float]:
    """Return ``round -> epsilon``.

    ``constant`` keeps ``eps0``.  ``geometric`` multiplies by ``ratio`` each
    round; given ``eps_end`` and ``rounds`` instead, the ratio is chosen so
    the last round (index ``rounds - 1``) uses exactly ``eps_end``.
    """
    if not eps0 > 0:
        raise ValueError("eps0 must be positive")
    if kind == "constant":
        return lambda i: eps0
    if kind != "geometric":
        raise ValueError(f"unknown schedule {kind!r}")
    if ratio is None:
        if eps_end is None or rounds is None:
            raise ValueError("geometric schedule needs ratio, or eps_end and rounds")
        if not eps_end > 0:
            raise ValueError("eps_end must be positive")
        ratio = (eps_end / eps0) ** (1.0 / (rounds - 1)) if rounds > 1 else 1.0
    if not 0 < ratio <= 1:
        raise ValueError("ratio must lie in (0, 1]")
    return lambda i: eps0 * ratio ** i
