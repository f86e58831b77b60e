import mpmath as mp
import numpy as np
import pytest

from wqfl.bound import BoundConstants, bound_terms, compute_U, convergence_bound, discount_weights

K = dict(L=4.0, mu=1.0, G2=2.0, sigma2=(1.0, 1.0), Gamma=0.5, tau=3, gamma=10.0, Delta0=1.0)


def test_U_examples():
    assert compute_U(BoundConstants(**K)) == pytest.approx(90.0)
    k1 = BoundConstants(**{**K, "tau": 1})
    assert compute_U(k1) == pytest.approx(2.0 + 2.0 + 2 * 4.0 * 0.5)
    k0 = BoundConstants(**{**K, "G2": 0.0, "sigma2": (0.0, 0.0), "Gamma": 0.0})
    assert compute_U(k0) == 0.0


def test_lossless_bound():
    k = BoundConstants(**K)
    for T in (1, 10, 100):
        expected = k.L / 2 * (4 * compute_U(k) / k.mu ** 2 + k.gamma * k.Delta0) / (k.gamma + T)
        assert convergence_bound(T, k, 0.0, [0.5, 0.5]) == pytest.approx(expected, rel=1e-14)


def test_weights_against_direct_products():
    mp.mp.dps = 40
    T, gamma = 60, 10.0
    w = discount_weights(T, gamma)
    for j in (0, 7, 30, 59):
        direct = mp.fprod([1 - mp.mpf(2) / (gamma + i) for i in range(j + 1, T)])
        assert w[j] == pytest.approx(float(direct), rel=1e-12)
    assert w[-1] == 1.0


def test_weights_survive_long_horizons():
    w = discount_weights(200000, 3.0)
    assert np.all(np.isfinite(w)) and w[0] > 0 and np.all(np.diff(w) > 0)


def test_per_user_schedule_callable():
    k = BoundConstants(**K)
    J = lambda j, n: (j + 1) * (n + 1) * 1e-3
    arr = np.array([[(j + 1) * (n + 1) * 1e-3 for n in range(2)] for j in range(15)])
    assert bound_terms(15, k, J, [0.3, 0.7]).gap == pytest.approx(bound_terms(15, k, arr, [0.3, 0.7]).gap)


def test_gap_decreases_with_bits():
    k = BoundConstants(**K)
    gaps = [bound_terms(20, k, 1.0 / (2 ** b - 1) ** 2, [0.5, 0.5]).gap for b in range(1, 10)]
    assert all(np.diff(gaps) < 0)


@pytest.mark.parametrize("bad", [dict(gamma=2.0), dict(mu=5.0), dict(tau=0), dict(G2=-1.0)])
def test_validation(bad):
    with pytest.raises(ValueError):
        BoundConstants(**{**K, **bad})


def test_negative_J2_rejected():
    with pytest.raises(ValueError):
        bound_terms(5, BoundConstants(**K), -1.0, [1.0])
