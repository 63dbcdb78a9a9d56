import random
from fractions import Fraction

import pytest

from vankampen.complex import load_complex
from vankampen.exactgeo import AffineSimplex, rank
from vankampen.utils import COMPLEX_DIR


def random_simplex(rng: random.Random, d: int, m: int, spread: int = 40) -> AffineSimplex:
    """Non-degenerate m-simplex in Q^d with a random orientation."""
    while True:
        points = tuple(
            tuple(Fraction(rng.randint(-spread, spread)) for _ in range(d)) for _ in range(m + 1)
        )
        s = AffineSimplex(points, rng.choice((1, -1)))
        if m == 0 or rank(s.edge_matrix()) == m:
            return s


def random_dims(rng: random.Random, r: int, d: int) -> list[int]:
    while True:
        dims = [rng.randint(0, d) for _ in range(r)]
        if sum(dims) == d * (r - 1):
            return dims


@pytest.fixture
def rng():
    return random.Random(20240601)


@pytest.fixture(scope="session")
def sample_complex():
    cache = {}

    def load(name: str):
        if name not in cache:
            cache[name] = load_complex(COMPLEX_DIR / f"{name}.json")
        return cache[name]

    return load
