import math
import random
from pathlib import Path
from typing import Callable, Sequence

import pytest

from outflare.automorphisms import Automorphism, compose, identity, inverse, permutation
from outflare.library import get_automorphism
from outflare.whitehead import whitehead_moves
from outflare.words import Word, reduce

GOLDEN = (1, -1, -1)
PLASTIC = (1, 0, -1, -1)
PLASTIC_INVERSE = (1, -1, 0, -1)


@pytest.fixture
def fibonacci() -> Automorphism:
    return get_automorphism("fibonacci")


@pytest.fixture
def plastic() -> Automorphism:
    return get_automorphism("plastic")


@pytest.fixture
def plastic_conjugate() -> Automorphism:
    return get_automorphism("plastic-conjugate")


@pytest.fixture
def transposition() -> Automorphism:
    return get_automorphism("transposition")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240517)


@pytest.fixture
def random_word(rng: random.Random) -> Callable[[int, int], Word]:
    """Reduced words of length at most max_length, the identity included."""

    def build(rank: int, max_length: int) -> Word:
        letters = [rng.choice((1, -1)) * rng.randint(1, rank) for _ in range(3 * max_length)]
        return Word(reduce(letters).letters[: rng.randint(0, max_length)])

    return build


@pytest.fixture
def experiments_dir() -> Path:
    return Path(__file__).resolve().parent.parent / "data" / "experiments"


def _evaluate(coefficients: Sequence[int], x: float) -> float:
    value = 0.0
    for c in coefficients:
        value = value * x + c
    return value


def bisect_root(coefficients: Sequence[int], low: float, high: float) -> float:
    """Root of a polynomial with a sign change on [low, high]; coefficients leading first."""
    f_low = _evaluate(coefficients, low)
    for _ in range(200):
        middle = (low + high) / 2
        f_middle = _evaluate(coefficients, middle)
        if (f_middle < 0) == (f_low < 0):
            low, f_low = middle, f_middle
        else:
            high = middle
    return (low + high) / 2


@pytest.fixture
def golden_root() -> float:
    return bisect_root(GOLDEN, 1.0, 2.0)


@pytest.fixture
def plastic_root() -> float:
    return bisect_root(PLASTIC, 1.0, 2.0)


@pytest.fixture
def plastic_inverse_root() -> float:
    return bisect_root(PLASTIC_INVERSE, 1.0, 2.0)


def _totient(n: int) -> int:
    return sum(1 for k in range(1, n + 1) if math.gcd(n, k) == 1)


def cyclically_reduced_count(rank: int, length: int) -> int:
    """Cyclically reduced words of a given length: (2N-1)^n + (N-1)(-1)^n + N."""
    return (2 * rank - 1) ** length + (rank - 1) * (-1) ** length + rank


def conjugacy_class_count(rank: int, length: int) -> int:
    """Burnside count of cyclically reduced words up to rotation."""
    total = sum(
        _totient(length // d) * cyclically_reduced_count(rank, d)
        for d in range(1, length + 1)
        if length % d == 0
    )
    return total // length


@pytest.fixture
def class_count() -> Callable[[int, int], int]:
    """Number of canonical cyclic words of length 1..radius."""

    def count(rank: int, radius: int) -> int:
        return sum(conjugacy_class_count(rank, n) for n in range(1, radius + 1))

    return count


@pytest.fixture
def random_automorphism(rng: random.Random) -> Callable[[int], Automorphism]:
    """Products of a few Whitehead moves and signed permutations."""

    def build(rank: int) -> Automorphism:
        result = identity(rank)
        moves = whitehead_moves(rank)
        for _ in range(rng.randint(1, 4)):
            factor = rng.choice(moves)
            if rng.random() < 0.5:
                factor = inverse(factor)
            result = compose(result, factor)
        images = list(range(1, rank + 1))
        rng.shuffle(images)
        signs = [g if rng.random() < 0.5 else -g for g in images]
        return compose(result, permutation(signs))

    return build
