"""The intersection form between length functions and rational currents, and the height."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

from outflare.automorphisms import Automorphism, inverse
from outflare.currents import RationalCurrent, ZeroCurrentError, push_forward
from outflare.metric_trees import (
    LimitTreeApprox,
    TreePoint,
    act_right,
    limit_tree_approx,
    unit_rose,
)
from outflare.spectra import estimate_stretch
from outflare.words import RankMismatchError

Tree = Union[TreePoint, LimitTreeApprox]

DEFAULT_ZERO_THRESHOLD = 1e-9
DEFAULT_BOUNDARY_TOLERANCE = 1e-6


def intersect(tree: Tree, current: RationalCurrent) -> Union[Fraction, float]:
    """Pair a length function with a current: the sum of c * ||g||_T over the terms.

    :param tree: Marked rose (exact) or limit tree approximation (float)
    :param RationalCurrent current: The current
    :return: Nonnegative value
    """
    if current.max_generator() > tree.rank:
        raise RankMismatchError(tree.rank, current.max_generator())
    if isinstance(tree, TreePoint):
        return sum(
            (c * tree.translation_length(cyclic.as_word()) for c, cyclic in current.terms),
            Fraction(0),
        )
    return sum(
        (float(c) * tree.translation_length(cyclic.as_word()) for c, cyclic in current.terms), 0.0
    )


def check_equivariance(
    tree: TreePoint, automorphism: Automorphism, current: RationalCurrent
) -> bool:
    """Whether <T.phi, mu> equals <T, phi mu> exactly."""
    return intersect(act_right(tree, automorphism), current) == intersect(
        tree, push_forward(automorphism, current)
    )


@dataclass(frozen=True)
class HeightContext:
    """Approximate attracting and repelling trees of one automorphism."""

    t_plus: LimitTreeApprox
    t_minus: LimitTreeApprox
    log_stretch_sum: float
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD
    boundary_tolerance: float = DEFAULT_BOUNDARY_TOLERANCE

    def __post_init__(self) -> None:
        if self.t_plus.rank != self.t_minus.rank:
            raise RankMismatchError(self.t_plus.rank, self.t_minus.rank)

    @property
    def rank(self) -> int:
        return self.t_plus.rank

    @property
    def depth(self) -> int:
        return self.t_plus.depth

    @classmethod
    def from_automorphism(
        cls,
        automorphism: Automorphism,
        depth: int,
        base: Optional[TreePoint] = None,
        stretch_plus: Optional[float] = None,
        stretch_minus: Optional[float] = None,
        zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
        boundary_tolerance: float = DEFAULT_BOUNDARY_TOLERANCE,
    ) -> "HeightContext":
        """Approximate T_+ and T_- at the same depth from a common base point.

        :param Automorphism automorphism: The automorphism
        :param int depth: Iteration depth of both approximations
        :param TreePoint base: Base point, the unit rose by default
        :param float stretch_plus: Stretch factor of the automorphism, estimated when absent
        :param float stretch_minus: Stretch factor of the inverse, estimated when absent
        :return: Context
        :rtype: HeightContext
        """
        base = base or unit_rose(automorphism.rank)
        backward = inverse(automorphism)
        stretch_plus = stretch_plus or estimate_stretch(automorphism)
        stretch_minus = stretch_minus or estimate_stretch(backward)
        logging.debug(f"Height context at depth {depth}: {stretch_plus:.6g}, {stretch_minus:.6g}")
        return cls(
            limit_tree_approx(automorphism, base, depth, stretch_plus),
            limit_tree_approx(backward, base, depth, stretch_minus),
            math.log(stretch_plus * stretch_minus),
            zero_threshold,
            boundary_tolerance,
        )

    def swapped(self) -> "HeightContext":
        """The context of the inverse automorphism."""
        return HeightContext(
            self.t_minus,
            self.t_plus,
            self.log_stretch_sum,
            self.zero_threshold,
            self.boundary_tolerance,
        )


def _pair(context: HeightContext, current: RationalCurrent) -> tuple[float, float]:
    if current.is_zero():
        raise ZeroCurrentError("Height is undefined on the zero current")
    return float(intersect(context.t_plus, current)), float(intersect(context.t_minus, current))


def height(context: HeightContext, current: RationalCurrent) -> float:
    """log(<T_+, mu> / <T_-, mu>), with signed infinities where one side vanishes.

    :param HeightContext context: Approximate trees
    :param RationalCurrent current: Nonzero current
    :return: Height, scale invariant in the current
    :rtype: float
    """
    plus, minus = _pair(context, current)
    plus_vanishes = plus <= context.zero_threshold
    minus_vanishes = minus <= context.zero_threshold
    if plus_vanishes and minus_vanishes:
        raise ZeroCurrentError("Both intersections vanish below the zero threshold")
    if minus_vanishes:
        return math.inf
    if plus_vanishes:
        return -math.inf
    return math.log(plus / minus)


class NeighborhoodClass(Enum):
    U_PLUS = "u-plus"
    U_MINUS = "u-minus"
    BOUNDARY = "boundary"


def classify_neighborhood(context: HeightContext, current: RationalCurrent) -> NeighborhoodClass:
    """Which side of the height-zero level the current lies on.

    Relative differences below the boundary tolerance are reported as boundary.
    """
    plus, minus = _pair(context, current)
    scale = max(plus, minus)
    if scale <= context.zero_threshold or abs(plus - minus) < context.boundary_tolerance * scale:
        return NeighborhoodClass.BOUNDARY
    return NeighborhoodClass.U_PLUS if minus < plus else NeighborhoodClass.U_MINUS
