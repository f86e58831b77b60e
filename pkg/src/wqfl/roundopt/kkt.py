"""Optimality diagnostics for a continuous round solution.

Each check compares an allocation with the closed form it must satisfy at a
KKT point, given a multiplier record.  Residuals are relative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import LN2
from .lambertw import lambert_w0
from .solver import Multipliers, RoundAllocation, RoundProblem, _error_slope


@dataclass
class KKTReport:
    residuals: dict[str, float]

    @property
    def max(self) -> float:
        return max(self.residuals.values())

    def __getitem__(self, key):
        return self.residuals[key]


def _rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = np.maximum(np.abs(a), np.abs(b))
    out = np.where(scale > 0, np.abs(a - b) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(np.max(out)) if out.size else 0.0


def slot_from_price(g, E, lam1, cfg):
    """Slot length implied by the rate multiplier, via the Lambert W function."""
    psi = -(2.0 ** (-1.0 / (cfg.W * np.asarray(lam1, float)))) / math.e
    w = lambert_w0(psi)
    return -np.asarray(g) * np.asarray(E) / (cfg.W * cfg.N0 * (1.0 + 1.0 / w))


def kkt_residuals(alloc: RoundAllocation, mult: Multipliers, problem: RoundProblem) -> KKTReport:
    cfg = problem.cfg
    d = cfg.model_dim
    g, E, l_up, B = problem.gains, alloc.E, alloc.l_up, np.asarray(alloc.B, float)
    lam1, lam2 = np.asarray(mult.lambda1, float), np.asarray(mult.lambda2, float)
    lam5 = np.asarray(mult.lambda5, float)

    res = {}
    denom = 1.0 - mult.lambda4
    k = 2.0 * float(np.sum(lam2 * cfg.zeta * problem.cycles ** 3))
    res["deadline"] = _rel(alloc.l_c, np.cbrt(k / denom)) if denom > 0 else math.inf
    res["energy"] = _rel(E, l_up * cfg.W * (lam1 / (lam2 * LN2) - cfg.N0 / g))
    res["energy_budget"] = _rel(E, problem.tx_energy(alloc.l_c))
    res["slot"] = _rel(l_up, slot_from_price(g, E, lam1, cfg))
    rate = l_up * cfg.W * np.log1p(g * E / (l_up * cfg.W * cfg.N0)) / LN2
    res["bits"] = _rel(B, (rate - cfg.m) / d - 1.0)

    # bit stationarity, d*lam1 - lam5 = lam3 * p * delta^2 * 2 ln2 2^B / (2^B - 1)^3,
    # in derivative form so clamped users (lam3 term ~ 0) stay well defined
    slopes = np.array([_error_slope(b) for b in B])
    lhs = d * lam1 - lam5
    rhs = mult.lambda3 * problem.weighted_delta2 * slopes
    res["bit_stationarity"] = float(np.max(np.abs(lhs - rhs) / (d * lam1)))

    every = np.concatenate([lam1, lam2, [mult.lambda3, mult.lambda4], lam5])
    res["nonnegativity"] = float(max(0.0, -every.min()) / max(1.0, np.abs(every).max()))
    res["slackness_deadline"] = abs(mult.lambda4 * (alloc.l_c - problem.a1) / alloc.l_c)
    res["slackness_bits"] = float(np.max(np.abs(lam5 * (B - 1.0)) / (d * lam1)))
    return KKTReport(res)
