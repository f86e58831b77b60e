"""Brute-force reference optimizers for small instances.

These share nothing with the solver beyond the problem data: slot lengths
come from a vectorized bisection directly on the rate expression, and the
search is exhaustive over a grid.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .solver import RoundProblem

LN2 = np.log(2.0)


def _slot_lengths(S, E, g, W, N0, iters: int = 64):
    """Smallest slot delivering ``S`` bits; ``inf`` where impossible."""
    S, E, g = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (S, E, g)))
    b = np.where(E > 0, g * np.maximum(E, 0.0) / (W * N0), 0.0)
    ok = (E > 0) & (S < W * b / LN2)

    def rate(l):
        with np.errstate(divide="ignore", invalid="ignore"):
            return l * W * np.log1p(b / l) / LN2

    hi = np.where(ok, S / W, 1.0)
    for _ in range(2000):
        short = ok & (rate(hi) < S)
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    lo = np.zeros_like(hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        enough = rate(mid) >= S
        hi = np.where(enough, mid, hi)
        lo = np.where(enough, lo, mid)
    return np.where(ok, hi, np.inf)


@dataclass
class OracleResult:
    latency: float
    l_c: float
    B: np.ndarray


def _round_latency(problem: RoundProblem, l_c, B):
    """Latency for deadlines ``l_c`` (shape K) and bit widths ``B`` (shape K x N)."""
    cfg = problem.cfg
    l_c = np.asarray(l_c, float)[:, None]
    E = problem.E_max[None, :] - cfg.zeta * problem.cycles[None, :] ** 3 / l_c ** 2
    S = cfg.model_dim * (B + 1.0) + cfg.m
    slots = _slot_lengths(S, E, problem.gains[None, :], cfg.W, cfg.N0)
    return l_c[:, 0] + slots.sum(axis=1)


def _tight_last(problem: RoundProblem, B_rest, last: int):
    """Bits of user ``last`` that make the error constraint tight given the others."""
    wd2 = problem.weighted_delta2
    rest_idx = [i for i in range(problem.n_users) if i != last]
    used = np.sum(wd2[rest_idx] / np.expm1(B_rest * LN2) ** 2, axis=-1)
    room = problem.epsilon - used
    with np.errstate(divide="ignore", invalid="ignore"):
        B_last = np.where(wd2[last] > 0, np.log2(1.0 + np.sqrt(wd2[last] / room)), 1.0)
    B_last = np.where(room > 0, np.maximum(B_last, 1.0), np.nan)
    return np.where((room > 0) | (wd2[last] == 0) & (room >= 0), B_last, np.nan)


def _assemble(B_rest, B_last, last, n):
    out = np.empty(B_rest.shape[:-1] + (n,))
    rest_idx = [i for i in range(n) if i != last]
    out[..., rest_idx] = B_rest
    out[..., last] = B_last
    return out


def grid_oracle(problem: RoundProblem, n_deadline: int = 500, n_bits: int = 400,
                deadline_span: float = 100.0, refine: bool = True) -> OracleResult:
    """Continuous optimum by exhaustive search over deadline and bit grids.

    The user with the largest error weight takes whatever bits make the error
    constraint tight; the others are gridded.  Intended for two or three users.
    """
    n = problem.n_users
    last = int(np.argmax(problem.weighted_delta2))
    b_top = float(problem.b_cap)
    a1 = problem.a1
    l_grid = a1 * np.logspace(0.0, np.log10(deadline_span), n_deadline)
    axes = [np.linspace(1.0, b_top, n_bits)] * (n - 1)
    best = _search(problem, l_grid, axes, last)
    if refine:
        dl = l_grid[1] / l_grid[0]
        step = (b_top - 1.0) / (n_bits - 1)
        l_fine = np.clip(best.l_c * dl ** np.linspace(-1.0, 1.0, 101), a1, None)
        rest = [best.B[i] for i in range(n) if i != last]
        axes = [np.clip(np.linspace(b - step, b + step, 101), 1.0, b_top) for b in rest]
        fine = _search(problem, np.unique(l_fine), axes, last)
        if fine.latency < best.latency:
            best = fine
    return best


def _search(problem, l_grid, axes, last) -> OracleResult:
    n = problem.n_users
    B_rest = np.array(list(itertools.product(*axes))).reshape(-1, n - 1)
    B_last = _tight_last(problem, B_rest, last)
    keep = ~np.isnan(B_last) & (B_last <= problem.b_cap)
    B_all = _assemble(B_rest[keep], B_last[keep], last, n)
    if len(B_all) == 0:
        return OracleResult(np.inf, np.nan, np.full(n, np.nan))
    lat = _round_latency(problem, np.repeat(l_grid, len(B_all)), np.tile(B_all, (len(l_grid), 1)))
    i = int(np.argmin(lat))
    return OracleResult(float(lat[i]), float(l_grid[i // len(B_all)]), B_all[i % len(B_all)].copy())


def integer_oracle(problem: RoundProblem, b_max: int = 40, n_deadline: int = 2000,
                   deadline_span: float = 100.0) -> OracleResult:
    """Best integer bit widths in ``[1, b_max]^N`` with a dense deadline search.

    Only the smallest feasible width of the last user is tried for each
    combination of the others, since latency grows with every width.
    """
    n = problem.n_users
    last = n - 1
    wd2 = problem.weighted_delta2
    combos = np.array(list(itertools.product(range(1, b_max + 1), repeat=n - 1)), float).reshape(-1, n - 1)
    used = np.sum(wd2[:last] / np.expm1(combos * LN2) ** 2, axis=1)
    cand = []
    for rest, u in zip(combos, used):
        for b in range(1, b_max + 1):
            if u + wd2[last] / np.expm1(b * LN2) ** 2 <= problem.epsilon:
                cand.append(np.append(rest, b))
                break
    if not cand:
        return OracleResult(np.inf, np.nan, np.full(n, np.nan))
    B_all = np.array(cand)
    a1 = problem.a1
    l_grid = a1 * np.logspace(0.0, np.log10(deadline_span), n_deadline)
    lat = _round_latency(problem, np.repeat(l_grid, len(B_all)), np.tile(B_all, (len(l_grid), 1)))
    lat = lat.reshape(len(l_grid), len(B_all))
    i, k = np.unravel_index(np.argmin(lat), lat.shape)
    # refine the deadline for the winning widths on a finer local grid
    ratio = l_grid[1] / l_grid[0]
    l_fine = np.clip(l_grid[i] * ratio ** np.linspace(-1.0, 1.0, 401), a1, None)
    lat_f = _round_latency(problem, l_fine, np.tile(B_all[k], (len(l_fine), 1)))
    j = int(np.argmin(lat_f))
    if lat_f[j] < lat[i, k]:
        return OracleResult(float(lat_f[j]), float(l_fine[j]), B_all[k].astype(int))
    return OracleResult(float(lat[i, k]), float(l_grid[i]), B_all[k].astype(int))
