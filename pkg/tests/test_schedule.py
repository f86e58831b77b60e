import pytest

from wqfl.fl import epsilon_schedule


def test_constant():
    f = epsilon_schedule("constant", 0.01)
    assert f(0) == f(100) == 0.01


def test_geometric_hits_end_value():
    f = epsilon_schedule("geometric", 0.1, eps_end=0.01, rounds=225)
    assert f(0) == 0.1
    assert f(224) == pytest.approx(0.01, rel=1e-12)
    g = epsilon_schedule("geometric", 0.1, ratio=10 ** (-1 / 224))
    assert g(224) == pytest.approx(0.01, rel=1e-12)
    assert all(f(i + 1) < f(i) for i in range(224))


def test_equal_end_points_are_constant():
    f = epsilon_schedule("geometric", 0.05, eps_end=0.05, rounds=10)
    assert [f(i) for i in range(10)] == pytest.approx([0.05] * 10)


@pytest.mark.parametrize("kwargs", [dict(kind="geometric", eps0=0.1),
                                    dict(kind="geometric", eps0=0.1, ratio=1.5),
                                    dict(kind="linear", eps0=0.1),
                                    dict(kind="constant", eps0=0.0)])
def test_bad_specs(kwargs):
    with pytest.raises(ValueError):
        epsilon_schedule(**kwargs)
