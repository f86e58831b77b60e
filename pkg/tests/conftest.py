import json
from pathlib import Path

import numpy as np
import pytest

from wqfl.channel import PhysicsConfig, UserProfile

GOLDEN = json.loads((Path(__file__).parent / "golden.json").read_text())
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def cfg():
    return PhysicsConfig()


def make_profiles(c, p=None, workload=1e6, f_max=1.5e9, E_max=0.3, distance=100.0):
    n = len(c)
    p = np.full(n, 1.0 / n) if p is None else p
    f_max = np.broadcast_to(f_max, (n,))
    E_max = np.broadcast_to(E_max, (n,))
    return [UserProfile(id=i, c=float(c[i]), workload_bits=workload, f_max=float(f_max[i]),
                        E_max=float(E_max[i]), p=float(p[i]), distance=distance) for i in range(n)]


@pytest.fixture(scope="session")
def mnist_subset_dir(tmp_path_factory):
    """5000 real MNIST digits (500 per class) split 2000/3000 and written as IDX files."""
    data = pytest.importorskip("mlxtend.data")
    from wqfl.fl.data import MNIST_FILES, write_idx
    X, y = data.mnist_data()
    order = np.random.default_rng(2024).permutation(len(y))
    out = tmp_path_factory.mktemp("mnist")
    for split, idx in (("train", order[:2000]), ("test", order[2000:])):
        write_idx(out / MNIST_FILES[f"{split}_images"], X[idx].reshape(-1, 28, 28).astype(np.uint8))
        write_idx(out / MNIST_FILES[f"{split}_labels"], y[idx].astype(np.uint8))
    return out
