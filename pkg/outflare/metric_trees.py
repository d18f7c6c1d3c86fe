"""Length functions of marked metric roses and of limit-tree approximations."""

import logging
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from outflare.automorphisms import Automorphism, compose, identity, power
from outflare.words import RankMismatchError, Word, cyclic_core, cyclic_words

Rational = Union[Fraction, int]


@dataclass(frozen=True)
class TreePoint:
    """A rose with positive edge lengths, twisted by a marking automorphism.

    ``||w|| = scale * sum of edge lengths along the cyclic reduction of marking(w)``.
    """

    edge_lengths: tuple[Fraction, ...]
    marking: Automorphism
    scale: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        lengths = tuple(Fraction(x) for x in self.edge_lengths)
        object.__setattr__(self, "edge_lengths", lengths)
        object.__setattr__(self, "scale", Fraction(self.scale))
        if len(lengths) != self.marking.rank:
            raise RankMismatchError(self.marking.rank, len(lengths))
        if any(x <= 0 for x in lengths):
            raise ValueError(f"Edge lengths must be positive: {lengths}")
        if self.scale <= 0:
            raise ValueError(f"Scale must be positive: {self.scale}")

    @property
    def rank(self) -> int:
        return len(self.edge_lengths)

    def translation_length(self, word: Word) -> Fraction:
        """Translation length of a word.

        :param Word word: The word
        :return: Exact length
        :rtype: Fraction
        """
        core = cyclic_core(self.marking.apply(word))
        counts = Counter(abs(x) for x in core.letters)
        total = sum((self.edge_lengths[g - 1] * n for g, n in counts.items()), Fraction(0))
        return self.scale * total

    def volume(self) -> Fraction:
        return self.scale * sum(self.edge_lengths, Fraction(0))


def unit_rose(rank: int) -> TreePoint:
    """The Cayley tree of the standard basis."""
    return TreePoint(tuple(Fraction(1) for _ in range(rank)), identity(rank))


def translation_length(tree: "Union[TreePoint, LimitTreeApprox]", word: Word) -> Rational:
    return tree.translation_length(word)


def act_right(tree: TreePoint, automorphism: Automorphism) -> TreePoint:
    """The point T.phi with ||w||_{T.phi} = ||Phi(w)||_T.

    :param TreePoint tree: Start point
    :param Automorphism automorphism: Acting automorphism
    :return: Translated point
    :rtype: TreePoint
    """
    if automorphism.rank != tree.rank:
        raise RankMismatchError(tree.rank, automorphism.rank)
    return TreePoint(tree.edge_lengths, compose(tree.marking, automorphism), tree.scale)


def scaled(tree: TreePoint, factor: Rational) -> TreePoint:
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError(f"Scale factor must be positive: {factor}")
    return TreePoint(tree.edge_lengths, tree.marking, tree.scale * factor)


def normalize_covolume(tree: TreePoint) -> TreePoint:
    """Rescale to total edge volume one, staying in the same projective class."""
    return TreePoint(tree.edge_lengths, tree.marking, Fraction(1) / sum(tree.edge_lengths))


def probe_words(rank: int, max_length: int = 4) -> list[Word]:
    """Canonical cyclic words of length at most ``max_length``, as words."""
    return [cyclic.as_word() for cyclic in cyclic_words(rank, max_length)]


def _normalized(lengths: Sequence[float]) -> list[float]:
    total = sum(lengths)
    if total <= 0:
        raise ValueError("Length vector vanishes on the probe set")
    return [x / total for x in lengths]


def projective_gap(first: Sequence[float], second: Sequence[float]) -> float:
    """L1 distance of two length vectors after scaling each to sum one."""
    return sum(abs(x - y) for x, y in zip(_normalized(first), _normalized(second)))


def first_increase(
    values: Sequence[float], burn_in: int = 0, slack: float = 0.0
) -> Optional[int]:
    """Index of the first value past ``burn_in`` that rises above its predecessor by over ``slack``.

    :param values: Residuals in iteration order
    :param int burn_in: Leading values exempt from the check
    :param float slack: Allowed rise, absorbs rounding
    :return: Offending index, None when the tail is non-increasing
    :rtype: int or None
    """
    for index in range(max(burn_in, 0) + 1, len(values)):
        if values[index] > values[index - 1] + slack:
            return index
    return None


@dataclass(frozen=True)
class LimitTreeApprox:
    """Depth-n approximation of the attracting tree: ``||w|| = stretch^-n ||Phi^n(w)||_base``."""

    base: TreePoint
    automorphism: Automorphism
    depth: int
    stretch: float
    iterate: Automorphism = field(repr=False, compare=False)

    @property
    def rank(self) -> int:
        return self.base.rank

    def translation_length(self, word: Word) -> float:
        return float(self.base.translation_length(self.iterate.apply(word))) / (
            self.stretch**self.depth
        )

    def residual(self, probe: Sequence[Word]) -> float:
        """Projective gap between depth n and depth n + 1 on a probe set.

        :param probe: Probe words
        :return: L1 distance of normalised length vectors
        :rtype: float
        """
        current = []
        deeper = []
        for word in probe:
            image = self.iterate.apply(word)
            current.append(float(self.base.translation_length(image)))
            deeper.append(float(self.base.translation_length(self.automorphism.apply(image))))
        return projective_gap(current, deeper)


def limit_tree_approx(
    automorphism: Automorphism, base: TreePoint, depth: int, stretch: float
) -> LimitTreeApprox:
    """Approximate the limit tree of ``base`` under forward iteration.

    :param Automorphism automorphism: The automorphism
    :param TreePoint base: Starting point
    :param int depth: Number of iterations, at least one
    :param float stretch: Stretch factor estimate, greater than one
    :return: Approximation
    :rtype: LimitTreeApprox
    """
    if stretch <= 1:
        raise ValueError(f"Stretch factor estimate must exceed 1, got {stretch}")
    if depth < 1:
        raise ValueError(f"Depth must be at least 1, got {depth}")
    if automorphism.rank != base.rank:
        raise RankMismatchError(base.rank, automorphism.rank)
    logging.debug(f"Limit tree approximation of {automorphism.name or 'automorphism'} at {depth}")
    return LimitTreeApprox(base, automorphism, depth, float(stretch), power(automorphism, depth))
