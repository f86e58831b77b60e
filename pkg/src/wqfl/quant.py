"""Stochastic quantization of weight differentials.

Magnitudes are mapped onto a uniform grid of ``2**bits`` levels spanning
``[w_min, w_max]`` (the smallest and largest magnitude in the vector) and
rounded up or down at random so the reconstruction is unbiased.  Each element
costs ``bits`` bits plus one sign bit; ``m`` header bits carry the range.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_BITS = 52  # grid positions must stay exact in float64


@dataclass(frozen=True)
class QuantizedUpdate:
    w_min: float
    w_max: float
    bits: int
    levels: np.ndarray
    signs: np.ndarray
    payload_bits: int

    @property
    def d(self) -> int:
        return int(self.levels.size)


def payload_bits(d: int, bits: int, m: int) -> int:
    if d < 1 or bits < 1 or m < 0:
        raise ValueError("need d >= 1, bits >= 1, m >= 0")
    return int(d) * (int(bits) + 1) + int(m)


def quantize(delta, bits: int, rng: np.random.Generator, m: int = 64) -> QuantizedUpdate:
    delta = np.asarray(delta, dtype=float).ravel()
    if delta.size < 1:
        raise ValueError("cannot quantize an empty vector")
    if not 1 <= bits <= MAX_BITS:
        raise ValueError(f"bits must be in [1, {MAX_BITS}]")
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta contains non-finite entries")

    mag = np.abs(delta)
    w_min, w_max = float(mag.min()), float(mag.max())
    signs = np.where(delta < 0, -1, 1).astype(np.int8)
    top = 2 ** bits - 1
    if w_max == w_min:
        levels = np.zeros(delta.size, dtype=np.int64)
    else:
        pos = (mag - w_min) / (w_max - w_min) * top
        lower = np.floor(pos)
        up = rng.random(delta.size) < (pos - lower)
        levels = np.clip(lower + up, 0, top).astype(np.int64)
    return QuantizedUpdate(w_min, w_max, int(bits), levels, signs,
                           payload_bits(delta.size, bits, m))


def dequantize(q: QuantizedUpdate) -> np.ndarray:
    step = (q.w_max - q.w_min) / (2 ** q.bits - 1)
    return q.signs * (q.w_min + q.levels * step)


def variance_bound(d: int, w_min: float, w_max: float, bits) -> float:
    """Upper bound on ``E||Q(x) - x||^2`` for a vector with the given range."""
    if bits < 1 or d < 1 or not w_max >= w_min >= 0:
        raise ValueError("need bits >= 1, d >= 1 and w_max >= w_min >= 0")
    return float(d * (w_max - w_min) ** 2 / (4.0 * np.expm1(bits * np.log(2.0)) ** 2))


def error_scale(delta) -> float:
    """Range scale ``sqrt(d)/2 * (max|x| - min|x|)``.

    The variance bound at ``B`` bits is this value squared over ``(2**B - 1)**2``.
    """
    mag = np.abs(np.asarray(delta, dtype=float).ravel())
    return float(np.sqrt(mag.size) / 2.0 * (mag.max() - mag.min()))
