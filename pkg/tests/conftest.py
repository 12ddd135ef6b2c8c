import pytest

from integral_uncertainty.concentration import make_pair
from integral_uncertainty.transforms import TransformSpec

SHIPPED_PAIRS = [((0.0, 1.0), (0.0, 1.0)), ((0.5, 1.5), (0.0, 2.0)), ((0.0, 0.5), (0.0, 1.0))]

_cache = {}


def cached_pair(alpha, S, Sigma):
    key = (alpha, S, Sigma)
    if key not in _cache:
        _cache[key] = make_pair(TransformSpec.hankel(alpha), [S], [Sigma])
    return _cache[key]


@pytest.fixture
def pair_factory():
    return cached_pair


@pytest.fixture(scope="session")
def unit_pair():
    return cached_pair(0.0, (0.0, 1.0), (0.0, 1.0))
