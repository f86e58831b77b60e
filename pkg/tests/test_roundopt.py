import dataclasses
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import make_profiles
from wqfl.channel import LN2, PhysicsConfig, min_uplink_time, uplink_bits
from wqfl.errors import EpsilonUnreachable, Infeasible
from wqfl.roundopt import (Multipliers, RoundAllocation, RoundProblem, baseline_equal_energy,
                           baseline_equal_slots, baseline_fixed_bits, constraint_slacks,
                           cpu_frequencies, grid_oracle, integer_oracle, is_feasible, kkt_residuals,
                           round_and_resolve, solve_fixed_bits, solve_round,
                           solve_round_continuous)
from wqfl.scenario import random_problem

CFG = PhysicsConfig()
G2 = np.array([10 ** -11.25, 10 ** -11.0])


def two_user_problem(epsilon=0.01, delta=(1.0, 1.0), E_max=0.3, gains=G2):
    return RoundProblem(make_profiles([20, 30], E_max=E_max), gains, np.array(delta), epsilon, CFG)


# ------------------------------------------------------------ forward-construction oracle

def constructed_kkt_point():
    """Pick slots and multipliers first, then derive inputs that make them a KKT point."""
    c = np.array([20.0, 30.0])
    a = CFG.tau * c * 1e6
    l_c = a.max() / 1.5e9                       # deadline pinned at a1
    g = G2
    E = np.array([0.1, 0.15])
    x = np.array([1e4, 3e4])                    # received SNR in each slot
    l_up = g * E / (x * CFG.W * CFG.N0)
    # price of the rate constraint from d(slot length)/d(bits) = 1
    lam1 = LN2 / (CFG.W * (np.log1p(x) - x / (1 + x)))
    lam2 = lam1 / (LN2 * (E / (l_up * CFG.W) + CFG.N0 / g))
    lam4 = 1.0 - 2.0 * CFG.zeta * np.sum(lam2 * a ** 3) / l_c ** 3
    B = (l_up * CFG.W * np.log2(1 + x) - CFG.m) / CFG.model_dim - 1.0
    p = np.array([0.4, 0.6])
    slope = 2 * LN2 * 2 ** B / (2 ** B - 1) ** 3
    lam3 = 1.0
    delta = np.sqrt(CFG.model_dim * lam1 / (lam3 * p * slope))
    E_max = E + CFG.zeta * a ** 3 / l_c ** 2
    profiles = make_profiles(c, p=p, E_max=E_max)
    eps = float(np.sum(p * delta ** 2 / (2 ** B - 1) ** 2))
    problem = RoundProblem(profiles, g, delta, eps, CFG)
    alloc = RoundAllocation(l_c=l_c, f=cpu_frequencies(l_c, profiles, CFG), E=E, l_up=l_up, B=B)
    mult = Multipliers(lam1, lam2, lam3, lam4, np.zeros(2))
    return problem, alloc, mult


def test_forward_construction_has_zero_residuals():
    problem, alloc, mult = constructed_kkt_point()
    assert np.all(alloc.B > 1) and 0 <= mult.lambda4 < 1
    report = kkt_residuals(alloc, mult, problem)
    assert report.max <= 1e-10, report.residuals


def test_solver_recovers_constructed_point():
    problem, ref, ref_mult = constructed_kkt_point()
    alloc, mult = solve_round_continuous(problem)
    assert alloc.round_latency == pytest.approx(ref.round_latency, rel=1e-9)
    np.testing.assert_allclose(alloc.B, ref.B, rtol=1e-7)
    np.testing.assert_allclose(alloc.l_up, ref.l_up, rtol=1e-7)
    assert mult.lambda3 == pytest.approx(ref_mult.lambda3, rel=1e-6)
    assert mult.lambda4 == pytest.approx(ref_mult.lambda4, rel=1e-6)


def test_energy_perturbation_shows_in_residual():
    problem = two_user_problem()
    alloc, mult = solve_round_continuous(problem)
    bumped = dataclasses.replace(alloc, E=alloc.E * 1.01)
    r = kkt_residuals(bumped, mult, problem)
    assert 0.003 < r["energy"] < 0.03
    assert 0.003 < r["energy_budget"] < 0.03


def test_slot_identity_against_scalar_root():
    # the Lambert-W slot formula agrees with solving the slot stationarity directly
    from wqfl.roundopt import slot_from_price
    g, E, lam1 = 10 ** -11.1, 0.2, 3e-7
    W, N0 = CFG.W, CFG.N0

    def stationarity(l):
        x = g * E / (l * W * N0)
        return lam1 * W * (math.log1p(x) - x / (1 + x)) / LN2 - 1.0

    ref = brentq(stationarity, 1e-9, 1e3, xtol=1e-16, rtol=1e-15)
    assert slot_from_price(g, E, lam1, CFG) == pytest.approx(ref, rel=1e-10)


# ------------------------------------------------------------ continuous solver

def test_single_user_zero_range():
    profiles = make_profiles([25], p=np.array([1.0]))
    problem = RoundProblem(profiles, np.array([1e-11]), np.array([0.0]), 0.01, CFG)
    alloc, _ = solve_round_continuous(problem)
    assert alloc.B[0] == pytest.approx(1.0)
    assert alloc.l_c == pytest.approx(problem.a1)
    E = problem.tx_energy(problem.a1)[0]
    assert alloc.E[0] == pytest.approx(E)
    assert alloc.l_up[0] == pytest.approx(min_uplink_time(2 * CFG.model_dim + CFG.m, E, 1e-11, CFG),
                                          rel=1e-9)


def test_two_user_instance_matches_grid_oracle():
    problem = two_user_problem()
    alloc, mult = solve_round_continuous(problem)
    ref = grid_oracle(problem)
    assert abs(alloc.round_latency - ref.latency) <= 5e-3 * ref.latency
    assert kkt_residuals(alloc, mult, problem).max <= 1e-6


def test_latency_non_increasing_in_epsilon():
    lat = [solve_round_continuous(two_user_problem(eps))[0].round_latency
           for eps in (0.01, 0.03, 0.1, 0.3, 1, 5)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(lat, lat[1:]))


def test_latency_non_increasing_in_budget_and_gain():
    by_energy = [solve_round_continuous(two_user_problem(E_max=e))[0].round_latency
                 for e in (0.15, 0.2, 0.3, 0.5)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(by_energy, by_energy[1:]))
    by_gain = [solve_round_continuous(two_user_problem(gains=G2 * s))[0].round_latency
               for s in (1, 2, 5, 10)]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(by_gain, by_gain[1:]))


def test_infeasible_and_unreachable():
    with pytest.raises(Infeasible):
        solve_round_continuous(two_user_problem(gains=np.array([1e-18, 1e-11])))
    capped = dataclasses.replace(two_user_problem(epsilon=1e-9), b_cap=3)
    with pytest.raises(EpsilonUnreachable):
        solve_round_continuous(capped)


def test_problem_validation():
    with pytest.raises(ValueError):
        two_user_problem(epsilon=0)
    with pytest.raises(ValueError):
        two_user_problem(delta=(-1, 1))


# ------------------------------------------------------------ frequencies

def test_cpu_frequencies():
    same = make_profiles([20, 20, 20])
    f = cpu_frequencies(0.05, same, CFG)
    assert np.all(f == f[0])
    profiles = make_profiles([20, 30])
    a1 = 2 * 30 * 1e6 / 1.5e9
    f = cpu_frequencies(a1, profiles, CFG)
    assert f[1] == pytest.approx(1.5e9) and f[0] < 1.5e9
    assert cpu_frequencies(0.05, make_profiles([25]), CFG)[0] == pytest.approx(1e9)
    with pytest.raises(ValueError):
        cpu_frequencies(0.9 * a1, profiles, CFG)


# ------------------------------------------------------------ integer stage

def test_integral_bits_keep_continuous_latency():
    problem = two_user_problem()
    cont, _ = solve_round_continuous(problem)
    B = np.ceil(cont.B)
    fixed = solve_fixed_bits(problem, B)
    again = round_and_resolve(fixed, problem, refine=False)
    assert again.round_latency == pytest.approx(fixed.round_latency, rel=1e-9)
    np.testing.assert_array_equal(again.B, B)


def test_integer_stage_bracketed_by_oracles():
    problem = two_user_problem()
    alloc, cont, _ = solve_round(problem)
    ref = integer_oracle(problem)
    assert cont.round_latency <= alloc.round_latency * (1 + 1e-9)
    assert alloc.round_latency <= ref.latency * 1.005
    assert alloc.B.dtype.kind == "i" and np.all(alloc.B >= 1)


def test_integer_allocations_feasible_on_random_instances():
    for seed in range(100):
        problem = random_problem(3, 1000 + seed)
        alloc, _, _ = solve_round(problem)
        slack = constraint_slacks(alloc, problem)
        assert slack["error"][0] >= -1e-12, seed
        assert is_feasible(alloc, problem), seed
        assert np.max(np.abs(slack["energy"])) <= 1e-9


# ------------------------------------------------------------ baselines

def test_fixed_bits_not_better_than_proposed():
    problem = two_user_problem()
    alloc, _, _ = solve_round(problem)
    base = baseline_fixed_bits(problem, 16)
    assert np.all(base.B == 16)
    assert base.round_latency >= alloc.round_latency
    assert is_feasible(base, problem)


def test_equal_slots_symmetric_users_match_proposed():
    # tolerance chosen so the continuous optimum is B = 4 for everyone and
    # the integer stage has no reason to break the symmetry
    profiles = make_profiles([25, 25, 25])
    problem = RoundProblem(profiles, np.full(3, 1e-11), np.ones(3), 1.0 / 225.0, CFG)
    alloc, _, _ = solve_round(problem)
    np.testing.assert_array_equal(alloc.B, 4)
    base = baseline_equal_slots(problem)
    assert base.round_latency == pytest.approx(alloc.round_latency, rel=1e-7)


def test_baselines_feasible_and_dominated():
    for seed in range(10):
        problem = random_problem(6, 500 + seed)
        alloc, _, _ = solve_round(problem)
        for base in (baseline_fixed_bits(problem), baseline_equal_slots(problem, alloc.B),
                     baseline_equal_energy(problem)):
            assert is_feasible(base, problem, tol=1e-9)
            assert alloc.round_latency <= base.round_latency * (1 + 1e-12)
