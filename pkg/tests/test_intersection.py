import dataclasses
import math
import random
from fractions import Fraction

import pytest

from outflare.automorphisms import Automorphism, power
from outflare.currents import (
    RationalCurrent,
    ZeroCurrentError,
    counting_current,
    linear_combine,
    push_forward,
)
from outflare.intersection import (
    HeightContext,
    NeighborhoodClass,
    check_equivariance,
    classify_neighborhood,
    height,
    intersect,
)
from outflare.metric_trees import TreePoint, act_right, scaled, unit_rose
from outflare.words import RankMismatchError, Word, cyclic_length, cyclic_words, parse_word, reduce


def _random_word(rng: random.Random, rank: int, max_length: int) -> Word:
    word = Word()
    while word.is_identity():
        letters = [rng.choice([g, -g]) for g in (rng.randint(1, rank) for _ in range(max_length))]
        word = reduce(letters[: rng.randint(1, max_length)])
    return word


def _random_current(rng: random.Random, rank: int) -> RationalCurrent:
    return RationalCurrent.from_terms(
        (Fraction(rng.randint(1, 7), rng.randint(1, 4)), _random_word(rng, rank, 10))
        for _ in range(rng.randint(1, 3))
    )


def _random_tree(rng: random.Random, marking: Automorphism) -> TreePoint:
    lengths = tuple(Fraction(rng.randint(1, 9), rng.randint(1, 5)) for _ in range(marking.rank))
    return TreePoint(lengths, marking)


def test_unit_rose_pairs_to_cyclic_length(rng: random.Random) -> None:
    for _ in range(1000):
        rank = rng.randint(2, 4)
        word = _random_word(rng, rank, 20)
        assert intersect(unit_rose(rank), counting_current(word)) == cyclic_length(word)


def test_linearity_homogeneity_equivariance(rng: random.Random, random_automorphism) -> None:
    for _ in range(1000):
        rank = rng.randint(2, 4)
        tree = _random_tree(rng, random_automorphism(rank))
        phi = random_automorphism(rank)
        first = _random_current(rng, rank)
        second = _random_current(rng, rank)
        c = Fraction(rng.randint(1, 9), rng.randint(1, 9))

        combined = linear_combine([(1, first), (c, second)])
        assert intersect(tree, combined) == intersect(tree, first) + c * intersect(tree, second)
        assert intersect(scaled(tree, c), first) == c * intersect(tree, first)
        assert check_equivariance(tree, phi, first)


def test_intersect_values() -> None:
    rose = unit_rose(2)
    current = RationalCurrent.from_terms([(2, parse_word("a")), (3, parse_word("b"))])
    assert intersect(rose, current) == 5
    assert intersect(rose, counting_current(parse_word("abab"))) == 4
    assert intersect(rose, RationalCurrent()) == 0
    with pytest.raises(RankMismatchError):
        intersect(rose, counting_current(parse_word("c")))


def test_equivariance_for_the_anchor(fibonacci: Automorphism) -> None:
    for literal in ("a", "b", "ab", "aB", "abAB", "aabAb"):
        assert check_equivariance(unit_rose(2), fibonacci, counting_current(parse_word(literal)))
    moved = act_right(unit_rose(2), fibonacci)
    assert intersect(moved, counting_current(parse_word("b"))) == 1


@pytest.fixture
def plastic_context(plastic: Automorphism) -> HeightContext:
    return HeightContext.from_automorphism(plastic, 12)


def test_height_is_scale_invariant(plastic_context: HeightContext) -> None:
    eta = counting_current(parse_word("ab"))
    assert height(plastic_context, eta.scaled(7)) == pytest.approx(
        height(plastic_context, eta), abs=1e-12
    )


def test_swapped_context_negates_height(plastic_context: HeightContext) -> None:
    eta = counting_current(parse_word("aBc"))
    assert height(plastic_context.swapped(), eta) == pytest.approx(-height(plastic_context, eta))
    assert plastic_context.rank == 3
    assert plastic_context.depth == 12


def test_height_extremes(plastic_context: HeightContext) -> None:
    with pytest.raises(ZeroCurrentError):
        height(plastic_context, RationalCurrent())
    vanishing = dataclasses.replace(plastic_context, zero_threshold=math.inf)
    with pytest.raises(ZeroCurrentError):
        height(vanishing, counting_current(parse_word("a")))


def test_classify_iterates(plastic: Automorphism, plastic_context: HeightContext) -> None:
    eta = counting_current(parse_word("a"))
    forward = power(plastic, 20).apply(parse_word("a"))
    backward = power(plastic, -20).apply(parse_word("a"))
    assert classify_neighborhood(plastic_context, counting_current(forward)) is (
        NeighborhoodClass.U_PLUS
    )
    assert classify_neighborhood(plastic_context, counting_current(backward)) is (
        NeighborhoodClass.U_MINUS
    )
    wide = dataclasses.replace(plastic_context, boundary_tolerance=10.0)
    assert classify_neighborhood(wide, eta) is NeighborhoodClass.BOUNDARY


def test_attracting_side_is_invariant(
    plastic: Automorphism, plastic_context: HeightContext
) -> None:
    attracted = 0
    for cyclic in cyclic_words(3, 3):
        eta = counting_current(cyclic.as_word())
        if classify_neighborhood(plastic_context, eta) is not NeighborhoodClass.U_PLUS:
            continue
        attracted += 1
        image = push_forward(plastic, eta)
        assert classify_neighborhood(plastic_context, image) is NeighborhoodClass.U_PLUS, cyclic
    assert attracted > 0
