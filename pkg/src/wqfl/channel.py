"""Wireless uplink and on-device computation model.

Users upload over TDMA: each one occupies the full bandwidth ``W`` for its own
slot, and slots are sequential.  A slot of length ``l`` carrying transmit
energy ``E`` over a channel with linear power gain ``g`` delivers

    l * W * log2(1 + g * E / (l * W * N0))

bits.  This is increasing and concave in ``l`` with supremum
``g * E / (N0 * ln 2)`` (the capacity cap), so a payload at or above the cap
cannot be sent at any slot length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import Infeasible

LN2 = math.log(2.0)


def dbm_per_hz_to_watt_per_hz(dbm_per_hz: float) -> float:
    return 10.0 ** ((dbm_per_hz - 30.0) / 10.0)


@dataclass(frozen=True)
class PhysicsConfig:
    """Radio, hardware and payload constants shared by all users.

    ``N0`` is a noise power spectral density in W/Hz.  ``model_dim`` is the
    number of trainable parameters ``d`` and ``m`` the per-upload header size
    in bits (the two range values).
    """

    W: float = 0.3e6
    N0: float = dbm_per_hz_to_watt_per_hz(-174.0)
    zeta: float = 1e-27
    tau: int = 2
    m: int = 64
    pathloss_exponent: float = 3.75
    model_dim: int = 23860

    def __post_init__(self):
        for name in ("W", "N0", "zeta", "pathloss_exponent"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError("tau must be an integer >= 1")
        if self.m < 0 or self.model_dim < 1:
            raise ValueError("m must be >= 0 and model_dim >= 1")


@dataclass(frozen=True)
class UserProfile:
    """Static per-user parameters.

    ``c`` is CPU cycles per bit of workload, ``workload_bits`` the local-update
    workload ``D_n``, ``E_max`` the per-round energy budget in joules, ``p``
    the aggregation weight and ``distance`` the range to the base station.
    """

    id: int
    c: float
    workload_bits: float
    f_max: float
    E_max: float
    p: float
    distance: float

    def __post_init__(self):
        for name in ("c", "workload_bits", "f_max", "E_max", "p", "distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"user {self.id}: {name} must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    round: int
    gains: np.ndarray

    def __post_init__(self):
        if np.any(~(np.asarray(self.gains) > 0)):
            raise ValueError("channel gains must be strictly positive")


def sample_channels(profiles: Sequence[UserProfile], cfg: PhysicsConfig,
                    rng: np.random.Generator, round: int = 0) -> ChannelRealization:
    """Draw one quasi-static realization: Rayleigh fading times path loss."""
    dist = np.array([u.distance for u in profiles], dtype=float)
    if np.any(dist <= 0):
        raise ValueError("distances must be positive")
    # |h|^2 for h ~ CN(0, 1) is unit-mean exponential
    h2 = rng.exponential(1.0, size=len(profiles))
    return ChannelRealization(round=round, gains=h2 * dist ** (-cfg.pathloss_exponent))


def capacity_cap(E, g, cfg: PhysicsConfig):
    """Supremum of deliverable bits with energy ``E`` over any slot length."""
    return np.multiply(g, E) / (cfg.N0 * LN2)


def uplink_bits(l, E, g, cfg: PhysicsConfig):
    """Bits deliverable in a slot of ``l`` seconds with energy ``E``.

    Zero at ``l = 0``; tends to :func:`capacity_cap` as ``l`` grows.
    """
    l_arr, E_arr, g_arr = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (l, E, g)))
    if np.any(l_arr < 0) or np.any(E_arr < 0) or np.any(g_arr <= 0):
        raise ValueError("need l >= 0, E >= 0, g > 0")
    b = g_arr * E_arr / (cfg.W * cfg.N0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = l_arr * cfg.W * np.log1p(b / l_arr) / LN2
    out = np.where(l_arr > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def snr_for_rate_fraction(kappa: float) -> float:
    """Solve ``log1p(x) / x = kappa`` for ``x > 0`` with ``0 < kappa < 1``.

    ``kappa`` is the payload as a fraction of the capacity cap and ``x`` the
    resulting received SNR ``g E / (l W N0)``.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError("kappa must lie in (0, 1)")

    def h(u):
        x = math.exp(u)
        return math.log1p(x) / x - kappa

    # log1p(x)/x falls from 1 to 0; bracket in log-space by doubling
    hi = 1.0
    while h(hi) > 0:
        hi *= 2.0
    return math.exp(brentq(h, -700.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def min_uplink_time(S: float, E: float, g: float, cfg: PhysicsConfig) -> float:
    """Shortest slot that delivers ``S`` bits with energy ``E``.

    Raises :class:`Infeasible` when ``S`` reaches the capacity cap.
    """
    if S < 0 or g <= 0:
        raise ValueError("need S >= 0 and g > 0")
    if S == 0:
        return 0.0
    if E <= 0:
        raise Infeasible("no transmit energy left for a non-empty payload")
    cap = g * E / (cfg.N0 * LN2)
    kappa = S / cap
    if kappa >= 1.0:
        raise Infeasible(f"payload {S:.6g} bits >= capacity cap {cap:.6g} bits")
    x = snr_for_rate_fraction(kappa)
    return g * E / (cfg.W * cfg.N0) / x


def compute_time(profile: UserProfile, f, cfg: PhysicsConfig):
    return cfg.tau * profile.c * profile.workload_bits / f


def compute_energy(profile: UserProfile, f, cfg: PhysicsConfig):
    return cfg.tau * cfg.zeta * profile.c * profile.workload_bits * f ** 2
