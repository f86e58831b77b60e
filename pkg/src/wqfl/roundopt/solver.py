"""Per-round joint allocation of compute time, energy, slots and bits.

Every user finishes local computation at a shared deadline ``l_c`` and then
uploads in its own TDMA slot, so a round lasts ``l_c + sum(l_up)``.  The
continuous problem (real ``B >= 1``) is solved exactly by nesting:

* outer: root of the derivative of the optimal latency in ``l_c`` (obtained
  from the envelope theorem, so no finite differences are needed);
* inner, for a fixed ``l_c``: every user spends its whole remaining energy,
  and a scalar search over the multiplier of the quantization-error
  constraint chooses per-user bit widths until that constraint is tight.

Per user the slot is parametrized by its received SNR ``x = g E / (l W N0)``,
which turns payload, slot length and marginal slot cost into closed forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from ..channel import (LN2, PhysicsConfig, UserProfile, min_uplink_time, snr_for_rate_fraction,
                       uplink_bits)
from ..errors import EpsilonUnreachable, Infeasible
from .search import golden_section

DEFAULT_B_CAP = 40


@dataclass(frozen=True)
class RoundProblem:
    """Inputs of one round: users, channel gains, range scales and tolerance."""

    profiles: tuple[UserProfile, ...]
    gains: np.ndarray
    delta: np.ndarray
    epsilon: float
    cfg: PhysicsConfig
    b_cap: int = DEFAULT_B_CAP

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float))
        n = len(self.profiles)
        if n == 0 or self.gains.shape != (n,) or self.delta.shape != (n,):
            raise ValueError("profiles, gains and delta must have one entry per user")
        if np.any(self.gains <= 0) or np.any(self.delta < 0):
            raise ValueError("gains must be positive and delta non-negative")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.b_cap < 1:
            raise ValueError("b_cap must be >= 1")

    @property
    def n_users(self) -> int:
        return len(self.profiles)

    @cached_property
    def cycles(self) -> np.ndarray:
        """CPU cycles per round, ``tau * c * D``."""
        return np.array([self.cfg.tau * u.c * u.workload_bits for u in self.profiles])

    @cached_property
    def f_max(self) -> np.ndarray:
        return np.array([u.f_max for u in self.profiles])

    @cached_property
    def E_max(self) -> np.ndarray:
        return np.array([u.E_max for u in self.profiles])

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([u.p for u in self.profiles])

    @cached_property
    def weighted_delta2(self) -> np.ndarray:
        return self.p * self.delta ** 2

    @cached_property
    def a1(self) -> float:
        """Smallest admissible compute deadline (slowest user at full clock)."""
        return float(np.max(self.cycles / self.f_max))

    def tx_energy(self, l_c: float) -> np.ndarray:
        """Energy left for transmission once computation meets deadline ``l_c``."""
        return self.E_max - self.cfg.zeta * self.cycles ** 3 / l_c ** 2

    def payload(self, B):
        return self.cfg.model_dim * (np.asarray(B, dtype=float) + 1.0) + self.cfg.m

    def quant_error(self, B) -> float:
        B = np.asarray(B, dtype=float)
        return float(np.sum(self.weighted_delta2 / np.expm1(B * LN2) ** 2))


@dataclass
class RoundAllocation:
    l_c: float
    f: np.ndarray
    E: np.ndarray
    l_up: np.ndarray
    B: np.ndarray
    round_latency: float = field(init=False)
    feasible: bool = True

    def __post_init__(self):
        self.round_latency = float(self.l_c + np.sum(self.l_up))


@dataclass
class Multipliers:
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: float
    lambda4: float
    lambda5: np.ndarray


def cpu_frequencies(l_c: float, profiles: Sequence[UserProfile], cfg: PhysicsConfig) -> np.ndarray:
    """Clock speeds that make every user finish computing exactly at ``l_c``."""
    cycles = np.array([cfg.tau * u.c * u.workload_bits for u in profiles])
    f_max = np.array([u.f_max for u in profiles])
    a1 = float(np.max(cycles / f_max))
    if l_c < a1 * (1.0 - 1e-12):
        raise ValueError(f"l_c = {l_c:.6g} s is below the minimum compute time {a1:.6g} s")
    return np.minimum(cycles / l_c, f_max)


# ---------------------------------------------------------------- per-user link algebra

def _marginal_slot(x: float, W: float) -> float:
    """Extra slot time per extra payload bit at SNR ``x`` (d l / d S)."""
    if x < 1e-3:
        # log1p(x) - x/(1+x) = sum_{k>=2} (-1)^k (k-1)/k x^k
        gap = sum((-1) ** k * (k - 1) / k * x ** k for k in range(2, 8))
    else:
        gap = math.log1p(x) - x / (1.0 + x)
    return LN2 / (W * gap)


def _error_slope(B: float) -> float:
    """Minus the derivative of 1/(2^B - 1)^2 with respect to B."""
    if B > 60:
        return 2.0 * LN2 * math.exp(-2.0 * B * LN2)
    t = math.expm1(B * LN2)
    return 2.0 * LN2 * (t + 1.0) / t ** 3


class _Link:
    """Closed-form slot relations for one user at fixed transmit energy."""

    __slots__ = ("b", "cap", "W", "d", "m")

    def __init__(self, g: float, E: float, cfg: PhysicsConfig):
        self.b = g * E / (cfg.W * cfg.N0)   # seconds; slot length = b / x
        self.cap = cfg.W * self.b / LN2
        self.W, self.d, self.m = cfg.W, cfg.model_dim, cfg.m

    def bits_at(self, x: float) -> float:
        return self.W * self.b * math.log1p(x) / (x * LN2)

    def B_at(self, x: float) -> float:
        return (self.bits_at(x) - self.m) / self.d - 1.0

    def x_for(self, B: float) -> float:
        S = self.d * (B + 1.0) + self.m
        if S >= self.cap:
            raise Infeasible(f"payload {S:.6g} bits >= capacity cap {self.cap:.6g} bits")
        return snr_for_rate_fraction(S / self.cap)

    def B_sup(self, b_cap: float) -> float:
        return min(float(b_cap), (self.cap - self.m) / self.d - 1.0)

    def best_bits(self, lam3: float, wd2: float, b_cap: float) -> tuple[float, float]:
        """Bits minimizing slot time plus ``lam3`` times the weighted error term."""
        x1 = self.x_for(1.0)
        if wd2 == 0.0 or lam3 == 0.0:
            return 1.0, x1
        k = lam3 * wd2

        def r(u):
            x = math.exp(u)
            return self.d * _marginal_slot(x, self.W) - k * _error_slope(self.B_at(x))

        u1 = math.log(x1)
        if r(u1) >= 0.0:
            return 1.0, x1
        if self.d * (b_cap + 1.0) + self.m < self.cap:
            u_top = math.log(self.x_for(b_cap))
            if r(u_top) <= 0.0:
                return float(b_cap), math.exp(u_top)
        else:
            # B can approach the cap-limited maximum, where the slot blows up
            u_top = u1 - 1.0
            while r(u_top) < 0.0:
                u_top = u1 - 2.0 * (u1 - u_top)
        u = brentq(r, u_top, u1, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        x = math.exp(u)
        return self.B_at(x), x


# ---------------------------------------------------------------- inner problem (fixed energy)

@dataclass
class _Inner:
    B: np.ndarray
    x: np.ndarray
    lam3: float
    links: list


def _links(problem: RoundProblem, E: np.ndarray) -> list:
    if np.any(E <= 0):
        raise Infeasible("computation exhausts the energy budget of some user")
    return [_Link(g, e, problem.cfg) for g, e in zip(problem.gains, E)]


def _check_reachable(problem: RoundProblem, links: list) -> None:
    S1 = problem.payload(1.0)
    for n, link in enumerate(links):
        if S1 >= link.cap:
            raise Infeasible(f"user {problem.profiles[n].id}: one-bit payload exceeds capacity cap")
    B_sup = np.array([link.B_sup(problem.b_cap) for link in links])
    if problem.quant_error(B_sup) >= problem.epsilon:
        if np.all(B_sup[problem.weighted_delta2 > 0] >= problem.b_cap):
            raise EpsilonUnreachable(f"tolerance {problem.epsilon:.6g} needs more than {problem.b_cap} bits")
        raise Infeasible(f"tolerance {problem.epsilon:.6g} unreachable within the capacity caps")


def allocate_bits(problem: RoundProblem, E: np.ndarray) -> _Inner:
    """Bit widths minimizing total slot time at fixed transmit energies."""
    links = _links(problem, E)
    _check_reachable(problem, links)
    wd2 = problem.weighted_delta2
    eps = problem.epsilon

    def solve(lam3):
        pairs = [link.best_bits(lam3, w, problem.b_cap) for link, w in zip(links, wd2)]
        return np.array([q[0] for q in pairs]), np.array([q[1] for q in pairs])

    B, x = solve(0.0)
    if problem.quant_error(B) <= eps:
        return _Inner(B, x, 0.0, links)

    def excess(u):
        return problem.quant_error(solve(math.exp(u))[0]) / eps - 1.0

    lo, hi = -10.0, 0.0
    while excess(hi) > 0.0:
        lo, hi = hi, hi + 10.0
    while excess(lo) < 0.0:
        lo, hi = lo - 10.0, lo
    u = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    lam3 = math.exp(u)
    B, x = solve(lam3)
    return _Inner(B, x, lam3, links)


def _energy_prices(problem: RoundProblem, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Multipliers of the rate and energy constraints implied by slot SNRs."""
    cfg = problem.cfg
    lam1 = np.array([_marginal_slot(v, cfg.W) for v in x])
    lam2 = lam1 * problem.gains / (cfg.N0 * LN2 * (1.0 + x))
    return lam1, lam2


# ---------------------------------------------------------------- outer problem

def _feasible_at(problem: RoundProblem, l_c: float) -> bool:
    try:
        _check_reachable(problem, _links(problem, problem.tx_energy(l_c)))
    except Infeasible:
        return False
    return True


def _lowest_feasible_deadline(problem: RoundProblem) -> float:
    a1 = problem.a1
    if _feasible_at(problem, a1):
        return a1
    far = a1 * 1e6
    if not _feasible_at(problem, far):
        # re-raise the specific reason at (essentially) full energy
        _check_reachable(problem, _links(problem, problem.tx_energy(far)))
        raise Infeasible("round infeasible")
    lo, hi = math.log(a1), math.log(far)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _feasible_at(problem, math.exp(mid)):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13:
            break
    return math.exp(hi)


def _latency_slope(problem: RoundProblem, l_c: float) -> float:
    inner = allocate_bits(problem, problem.tx_energy(l_c))
    _, lam2 = _energy_prices(problem, inner.x)
    return 1.0 - float(np.sum(lam2 * 2.0 * problem.cfg.zeta * problem.cycles ** 3)) / l_c ** 3


def _optimal_deadline(problem: RoundProblem) -> float:
    lo = _lowest_feasible_deadline(problem)
    if lo == problem.a1:
        if _latency_slope(problem, lo) >= 0.0:
            return lo
    else:
        lo *= 1.0 + 1e-10
        if _latency_slope(problem, lo) >= 0.0:
            return lo
    hi = max(100.0 * problem.a1, 2.0 * lo)
    while _latency_slope(problem, hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
    return brentq(lambda l: _latency_slope(problem, l), lo, hi,
                  xtol=1e-15 * lo, rtol=4 * np.finfo(float).eps, maxiter=500)


def solve_round_continuous(problem: RoundProblem) -> tuple[RoundAllocation, Multipliers]:
    """Minimum-latency allocation with real-valued bit widths, and its multipliers."""
    l_c = _optimal_deadline(problem)
    E = problem.tx_energy(l_c)
    inner = allocate_bits(problem, E)
    lam1, lam2 = _energy_prices(problem, inner.x)
    slope = 1.0 - float(np.sum(lam2 * 2.0 * problem.cfg.zeta * problem.cycles ** 3)) / l_c ** 3
    lam4 = max(slope, 0.0) if l_c == problem.a1 else 0.0
    d = problem.cfg.model_dim
    wd2 = problem.weighted_delta2
    slopes = np.array([_error_slope(b) for b in inner.B])
    lam5 = np.where(inner.B <= 1.0, d * lam1 - inner.lam3 * wd2 * slopes, 0.0)
    l_up = np.array([link.b / v for link, v in zip(inner.links, inner.x)])
    alloc = RoundAllocation(l_c=l_c, f=cpu_frequencies(l_c, problem.profiles, problem.cfg),
                            E=E, l_up=l_up, B=inner.B)
    return alloc, Multipliers(lam1, lam2, inner.lam3, lam4, lam5)


# ---------------------------------------------------------------- fixed bit widths

def _deadline_floor(problem: RoundProblem, S: np.ndarray) -> float:
    """Smallest ``l_c`` leaving each user enough energy to beat its payload."""
    E_need = S * problem.cfg.N0 * LN2 / problem.gains
    spare = problem.E_max - E_need
    if np.any(spare <= 0):
        n = int(np.argmin(spare))
        raise Infeasible(f"user {problem.profiles[n].id}: payload {S[n]:.6g} bits "
                         "exceeds the capacity cap even with the whole energy budget")
    return max(problem.a1, float(np.max(np.sqrt(problem.cfg.zeta * problem.cycles ** 3 / spare))))


def slot_times(problem: RoundProblem, S: np.ndarray, E: np.ndarray) -> np.ndarray:
    return np.array([min_uplink_time(s, e, g, problem.cfg) for s, e, g in zip(S, E, problem.gains)])


def _minimize_deadline(problem: RoundProblem, objective, floor: float) -> float:
    def safe(l_c):
        try:
            return objective(l_c)
        except Infeasible:
            return math.inf

    hi = max(100.0 * problem.a1, 2.0 * floor)
    while safe(hi) < safe(floor + 0.5 * (hi - floor)):
        hi *= 2.0
    l_c, val = golden_section(safe, floor, hi, rtol=1e-9)
    if floor == problem.a1 and safe(floor) <= val:
        return floor
    return l_c


def solve_fixed_bits(problem: RoundProblem, B) -> RoundAllocation:
    """Minimum-latency deadline, energies and slots for given bit widths."""
    B = np.broadcast_to(np.asarray(B, dtype=float), (problem.n_users,)).copy()
    if np.any(B < 1):
        raise ValueError("bit widths must be >= 1")
    S = problem.payload(B)
    floor = _deadline_floor(problem, S)

    def latency(l_c):
        return l_c + float(np.sum(slot_times(problem, S, problem.tx_energy(l_c))))

    l_c = _minimize_deadline(problem, latency, floor)
    E = problem.tx_energy(l_c)
    return RoundAllocation(l_c=l_c, f=cpu_frequencies(l_c, problem.profiles, problem.cfg),
                           E=E, l_up=slot_times(problem, S, E), B=B)


def integer_bits(B) -> np.ndarray:
    """Ceiling of real bit widths, ignoring float noise just above an integer."""
    B = np.asarray(B, dtype=float)
    return np.maximum(np.ceil(B - 1e-9), 1.0).astype(int)


def _slot_table(problem: RoundProblem, l_c: float) -> np.ndarray:
    """``table[n, k]``: slot of user ``n`` sending ``k + 1``-bit levels at deadline ``l_c``."""
    E = problem.tx_energy(l_c)
    widths = np.arange(1, problem.b_cap + 1)
    S = problem.payload(widths)
    table = np.full((problem.n_users, len(widths)), math.inf)
    for n in range(problem.n_users):
        cap = problem.gains[n] * E[n] / (problem.cfg.N0 * LN2) if E[n] > 0 else 0.0
        for k in np.flatnonzero(S < cap):
            table[n, k] = min_uplink_time(S[k], E[n], problem.gains[n], problem.cfg)
    return table


def _improve_integer_bits(problem: RoundProblem, B: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Local search over integer widths at a fixed deadline.

    A move lowers one user's width by one bit, then restores the error
    tolerance by raising the widths with the best error reduction per unit of
    extra slot time.  The best improving move is applied until none remains.
    """
    wd2, eps, top = problem.weighted_delta2, problem.epsilon, problem.b_cap
    users = np.arange(problem.n_users)

    def err(b):
        return float(np.sum(wd2 / np.expm1(b * LN2) ** 2))

    def cost(b):
        return float(table[users, b - 1].sum())

    def ok(b):
        return err(b) <= eps * (1.0 + 1e-12)

    def _repairs(B, i):
        """Feasible width vectors after lowering user ``i`` by one bit."""
        base = B.copy()
        base[i] -= 1
        if ok(base):
            yield base
            return
        # raise a single other user as little as possible
        for j in users:
            if j == i:
                continue
            cand = base.copy()
            while cand[j] < top and not ok(cand):
                cand[j] += 1
            if ok(cand):
                yield cand
        # or spread the increase greedily by error reduction per extra slot time
        cand = base.copy()
        while not ok(cand):
            grow = [(wd2[j] * (1.0 / np.expm1(cand[j] * LN2) ** 2 - 1.0 / np.expm1((cand[j] + 1) * LN2) ** 2)
                     / max(table[j, cand[j]] - table[j, cand[j] - 1], 1e-300), j)
                    for j in users if j != i and cand[j] < top and np.isfinite(table[j, cand[j]])]
            if not grow:
                return
            cand[max(grow)[1]] += 1
        yield cand

    B = B.copy()
    best = cost(B)
    for _ in range(10 * problem.n_users * top):
        move, move_cost = None, best
        for i in users[B > 1]:
            for cand in _repairs(B, i):
                c = cost(cand)
                if c < move_cost * (1.0 - 1e-12):
                    move, move_cost = cand, c
        if move is None:
            break
        B, best = move, move_cost
    return B


def round_and_resolve(alloc: RoundAllocation, problem: RoundProblem, refine: bool = True) -> RoundAllocation:
    """Round bit widths up (keeps the error tolerance met) and re-optimize the rest.

    With ``refine`` the rounded widths are then improved by an integer local
    search, alternating with the deadline re-optimization; the result is never
    slower than plain rounding.
    """
    B = integer_bits(alloc.B)
    out = solve_fixed_bits(problem, B)
    if refine:
        for _ in range(8):
            cand_B = _improve_integer_bits(problem, B, _slot_table(problem, out.l_c))
            if np.array_equal(cand_B, B):
                break
            cand = solve_fixed_bits(problem, cand_B)
            if cand.round_latency >= out.round_latency:
                break
            B, out = cand_B, cand
    out.B = np.asarray(B, dtype=int)
    return out


def solve_round(problem: RoundProblem) -> tuple[RoundAllocation, RoundAllocation, Multipliers]:
    """Continuous solution, its multipliers, and the integer allocation actually used."""
    cont, mult = solve_round_continuous(problem)
    return round_and_resolve(cont, problem), cont, mult


def constraint_slacks(alloc: RoundAllocation, problem: RoundProblem) -> dict[str, np.ndarray]:
    """Relative slack of every constraint; negative entries are violations."""
    cfg = problem.cfg
    S = problem.payload(alloc.B)
    comp = cfg.zeta * problem.cycles * alloc.f ** 2
    err = problem.quant_error(alloc.B)
    return {
        "rate": uplink_bits(alloc.l_up, alloc.E, problem.gains, cfg) / S - 1.0,
        "energy": (problem.E_max - comp - alloc.E) / problem.E_max,
        "error": np.array([(problem.epsilon - err) / problem.epsilon]),
        "deadline": (alloc.l_c - problem.cycles / alloc.f) / alloc.l_c,
        "clock": (problem.f_max - alloc.f) / problem.f_max,
        "bits": alloc.B - 1.0,
    }


def is_feasible(alloc: RoundAllocation, problem: RoundProblem, tol: float = 1e-9) -> bool:
    return all(np.all(v >= -tol) for v in constraint_slacks(alloc, problem).values())
