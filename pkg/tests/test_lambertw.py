import math

import mpmath as mp
import numpy as np
import pytest

from wqfl.roundopt import lambert_w0


def test_special_values():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(-1 / math.e) == pytest.approx(-1.0, abs=1e-7)
    assert lambert_w0(1.0) == pytest.approx(float(mp.lambertw(1)), rel=1e-15)
    assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)


def test_domain_error():
    with pytest.raises(ValueError):
        lambert_w0(-0.4)


@pytest.mark.parametrize("x", [-0.3678, -0.2, -1e-8, 1e-300, 1e-5, 3.0, 1e3, 1e100, 1e300])
def test_against_high_precision(x):
    assert lambert_w0(x) == pytest.approx(float(mp.lambertw(x)), rel=1e-13, abs=1e-300)


def test_array_input_and_residual():
    x = np.concatenate([-np.geomspace(1 / math.e - 1e-12, 1e-12, 500), np.geomspace(1e-12, 1e8, 500)])
    w = lambert_w0(x)
    assert w.shape == x.shape
    assert np.all(w >= -1)
    r = np.abs(w * np.exp(w) - x) / np.maximum(1.0, np.abs(x))
    assert r.max() <= 1e-12


def test_price_argument_in_domain():
    # psi = -2^(-1/(W lam1)) / e stays inside (-1/e, 0) for any positive price
    W = 0.3e6
    for lam1 in np.geomspace(1e-8, 1e3, 50):
        psi = -(2.0 ** (-1.0 / (W * lam1))) / math.e
        assert -1 / math.e <= psi < 0
        w = lambert_w0(psi)
        assert -1 <= w < 0
