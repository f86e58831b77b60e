"""Reference allocators the joint optimizer is compared against."""
from __future__ import annotations

import numpy as np

from ..errors import Infeasible
from .solver import (RoundAllocation, RoundProblem, _deadline_floor, _minimize_deadline,
                     allocate_bits, cpu_frequencies, integer_bits, slot_times,
                     solve_fixed_bits, solve_round)


def baseline_fixed_bits(problem: RoundProblem, bits: int = 16) -> RoundAllocation:
    """Same optimizer, but every user sends ``bits``-bit levels."""
    out = solve_fixed_bits(problem, np.full(problem.n_users, int(bits)))
    out.B = out.B.astype(int)
    return out


def baseline_equal_slots(problem: RoundProblem, B=None) -> RoundAllocation:
    """All users get one common slot length, long enough for the slowest one.

    Bit widths come from the joint optimizer unless given; the compute
    deadline is re-optimized for the uniform-slot latency.
    """
    if B is None:
        B = solve_round(problem)[0].B
    B = np.asarray(B, dtype=int)
    S = problem.payload(B)
    floor = _deadline_floor(problem, S)
    n = problem.n_users

    def latency(l_c):
        return l_c + n * float(np.max(slot_times(problem, S, problem.tx_energy(l_c))))

    l_c = _minimize_deadline(problem, latency, floor)
    E = problem.tx_energy(l_c)
    slot = float(np.max(slot_times(problem, S, E)))
    return RoundAllocation(l_c=l_c, f=cpu_frequencies(l_c, problem.profiles, problem.cfg),
                           E=E, l_up=np.full(n, slot), B=B)


def baseline_equal_energy(problem: RoundProblem) -> RoundAllocation:
    """Half of each budget for computing, half for transmitting.

    The deadline is the shortest one whose compute energy fits in half the
    budget for every user; bit widths follow the joint optimizer's rule at
    the resulting transmit energies, rounded up.
    """
    E_tx = 0.5 * problem.E_max
    l_c = max(problem.a1, float(np.max(np.sqrt(problem.cfg.zeta * problem.cycles ** 3 / E_tx))))
    inner = allocate_bits(problem, E_tx)
    B = integer_bits(inner.B)
    S = problem.payload(B)
    if np.any(S >= np.array([link.cap for link in inner.links])):
        raise Infeasible("rounded bit widths exceed the capacity cap at half energy")
    return RoundAllocation(l_c=l_c, f=cpu_frequencies(l_c, problem.profiles, problem.cfg),
                           E=E_tx, l_up=slot_times(problem, S, E_tx), B=B)
