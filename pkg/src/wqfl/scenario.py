"""Seeded user placement and round-instance generation with the standard simulation defaults."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import PhysicsConfig, UserProfile, sample_channels
from .roundopt import RoundProblem


@dataclass(frozen=True)
class UserPopulation:
    """Distributions user profiles are drawn from."""

    c_range: tuple[float, float] = (10.0, 40.0)
    distance_range: tuple[float, float] = (0.0, 1000.0)
    min_distance: float = 1.0
    workload_bits: float = 1e6
    f_max: float = 1.5e9
    E_max: float = 0.3

    def __post_init__(self):
        for name in ("min_distance", "workload_bits", "f_max", "E_max"):
            if not float(getattr(self, name)) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("c_range", "distance_range"):
            lo, hi = (float(v) for v in getattr(self, name))
            if not 0 <= lo <= hi:
                raise ValueError(f"{name} must satisfy 0 <= lo <= hi")
        if not self.c_range[0] > 0:
            raise ValueError("cycles per bit must be positive")


def draw_profiles(n: int, rng: np.random.Generator, pop: UserPopulation = UserPopulation(),
                  p=None) -> list[UserProfile]:
    c = rng.uniform(*pop.c_range, size=n)
    dist = np.maximum(rng.uniform(*pop.distance_range, size=n), pop.min_distance)
    p = np.full(n, 1.0 / n) if p is None else np.asarray(p, dtype=float)
    return [UserProfile(id=i, c=float(c[i]), workload_bits=pop.workload_bits, f_max=pop.f_max,
                        E_max=pop.E_max, p=float(p[i]), distance=float(dist[i])) for i in range(n)]


def random_problem(n: int, seed: int, epsilon: float = 0.01, delta_range=(0.2, 2.0),
                   cfg: PhysicsConfig = PhysicsConfig(), pop: UserPopulation = UserPopulation(),
                   b_cap: int = 40) -> RoundProblem:
    """One round instance: placement, a fading draw and range scales, all from ``seed``."""
    rng = np.random.default_rng(seed)
    profiles = draw_profiles(n, rng, pop)
    gains = sample_channels(profiles, cfg, rng).gains
    delta = rng.uniform(*delta_range, size=n)
    return RoundProblem(profiles, gains, delta, epsilon, cfg, b_cap=b_cap)
