import numpy as np
import pytest

from stochlq import Dims, build_tree, generate_random
from stochlq.instances import noisy_control_scalar, symmetric_scalar


def random_instances(count=20, base_seed=1000, branch_spec="rademacher"):
    """Seeded random validated games with n, m, l in {1, 2, 3} and N in {2, 3, 4}."""
    out = []
    for i in range(count):
        rng = np.random.default_rng(base_seed + i)
        n, m, l = (int(a) for a in rng.integers(1, 4, size=3))
        N = int(rng.integers(2, 5))
        dims = Dims(n, m, l, N)
        out.append(generate_random(dims, build_tree(N, branch_spec), base_seed + i))
    return out


@pytest.fixture
def i1():
    return symmetric_scalar()


@pytest.fixture
def i2():
    return noisy_control_scalar()


@pytest.fixture(scope="session")
def random_games():
    return random_instances()
