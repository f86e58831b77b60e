"""Convergence upper bound for federated SGD with quantized updates.

For ``L``-smooth, ``mu``-strongly convex local losses and step size
``2 / (mu * (gamma + t))`` the expected optimality gap after ``T`` rounds is
bounded by a term decaying like ``1 / (gamma + T)`` plus a quantization
term: each round's weighted error bound ``sum_n p_n J_n^2(j)`` discounted by
``prod_{i=j+1}^{T-1} (1 - 2 / (gamma + i))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class BoundConstants:
    L: float
    mu: float
    G2: float
    sigma2: tuple[float, ...]
    Gamma: float
    tau: int
    gamma: float
    Delta0: float

    def __post_init__(self):
        object.__setattr__(self, "sigma2", tuple(float(s) for s in self.sigma2))
        if not self.L >= self.mu > 0:
            raise ValueError("need L >= mu > 0")
        if not self.gamma > max(2.0, 2.0 / self.mu, self.L / self.mu):
            raise ValueError("gamma must exceed max(2, 2/mu, L/mu)")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if min((self.G2, self.Gamma, self.Delta0) + self.sigma2) < 0:
            raise ValueError("G2, Gamma, Delta0 and sigma2 must be non-negative")


@dataclass(frozen=True)
class BoundTerms:
    first: float
    gap: float

    @property
    def total(self) -> float:
        return self.first + self.gap


def compute_U(k: BoundConstants, p=None) -> float:
    """Aggregate variance/heterogeneity constant of the bound.

    ``p`` is accepted for interface symmetry; the gradient-noise term sums
    the per-user variances unweighted.
    """
    t = k.tau
    return (t * t * sum(k.sigma2) + t * k.G2 + 2.0 * k.L * t * t * k.Gamma
            + (k.mu + 2.0) * t * (t - 1) * (2 * t - 1) / 6.0 * k.G2)


def discount_weights(T: int, gamma: float) -> np.ndarray:
    """``w[j] = prod_{i=j+1}^{T-1} (1 - 2/(gamma + i))`` for ``j = 0..T-1``, via log-sums."""
    i = np.arange(1, T)
    logs = np.log1p(-2.0 / (gamma + i))
    # suffix sums: w[j] needs logs for i = j+1 .. T-1, i.e. entries j .. T-2
    tail = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    return np.exp(tail)


def _j2_matrix(J2, T: int, n: int) -> np.ndarray:
    if callable(J2):
        return np.array([[J2(j, u) for u in range(n)] for j in range(T)], dtype=float)
    arr = np.broadcast_to(np.asarray(J2, dtype=float), (T, n))
    return arr


def bound_terms(T: int, k: BoundConstants, J2: Callable[[int, int], float] | np.ndarray,
                p) -> BoundTerms:
    if T < 1:
        raise ValueError("T must be >= 1")
    p = np.asarray(p, dtype=float)
    J = _j2_matrix(J2, T, len(p))
    if np.any(J < 0):
        raise ValueError("J^2 values must be non-negative")
    first = k.L / 2.0 / (k.gamma + T) * (4.0 * compute_U(k, p) / k.mu ** 2 + k.gamma * k.Delta0)
    gap = k.L / 2.0 * float(np.dot(J @ p, discount_weights(T, k.gamma)))
    return BoundTerms(first, gap)


def convergence_bound(T: int, k: BoundConstants, J2, p) -> float:
    """Upper bound on ``E[F(w(T))] - F(w*)``."""
    return bound_terms(T, k, J2, p).total
