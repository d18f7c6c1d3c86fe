"""Whitehead moves and greedy cyclic length minimisation."""

import itertools
import logging
from functools import lru_cache
from typing import Optional

from outflare.automorphisms import Automorphism
from outflare.words import Word, alphabet, cyclic_core, reduce

# Per other generator y: (conjugate on the left by x^-1, multiply on the right by x)
_PLACEMENTS = ((False, False), (False, True), (True, False), (True, True))


@lru_cache(maxsize=None)
def whitehead_moves(rank: int) -> tuple[Automorphism, ...]:
    """Type-II Whitehead automorphisms of the given rank, without inner automorphisms.

    For a letter x each other generator y is sent to one of y, yx, x^-1y or x^-1yx while x is
    fixed. Permutations and inversions of the basis are omitted since they preserve length.

    :param int rank: Rank
    :return: Moves in a fixed order
    :rtype: tuple
    """
    moves: list[Automorphism] = []
    for x in alphabet(rank):
        others = [g for g in range(1, rank + 1) if g != abs(x)]
        for choice in itertools.product(_PLACEMENTS, repeat=len(others)):
            if len(set(choice)) == 1 and choice[0][0] == choice[0][1]:
                # Trivial or conjugation by x
                continue
            images: list[Word] = []
            inverse_images: list[Word] = []
            placements = dict(zip(others, choice))
            for generator in range(1, rank + 1):
                if generator == abs(x):
                    images.append(Word((generator,)))
                    inverse_images.append(Word((generator,)))
                    continue
                left, right = placements[generator]
                images.append(
                    reduce(((-x,) if left else ()) + (generator,) + ((x,) if right else ()))
                )
                inverse_images.append(
                    reduce(((x,) if left else ()) + (generator,) + ((-x,) if right else ()))
                )
            moves.append(Automorphism(tuple(images), tuple(inverse_images), verify=False))
    logging.debug(f"Built {len(moves)} Whitehead moves for rank {rank}")
    return tuple(moves)


def whitehead_minimize(word: Word, rank: Optional[int] = None) -> tuple[int, Word]:
    """Minimise cyclic length over the Aut-orbit by steepest descent.

    Peak reduction guarantees that a word which is not of minimal length is shortened by some
    Whitehead move, so the descent ends at the global minimum.

    :param Word word: Nontrivial word
    :param int rank: Ambient rank, at least the largest generator used
    :return: Minimal cyclic length and a witness of that length
    :rtype: tuple
    """
    if word.is_identity():
        raise ValueError("Whitehead minimisation needs a nontrivial word")
    rank = max(rank or 0, word.max_generator(), 2)
    current = cyclic_core(word)
    length = len(current)
    moves = whitehead_moves(rank)
    while length > 1:
        best: Optional[Word] = None
        for move in moves:
            candidate = cyclic_core(move.apply(current))
            if len(candidate) < (length if best is None else len(best)):
                best = candidate
        if best is None:
            break
        current = best
        length = len(best)
    return length, current


def is_primitive(word: Word, rank: Optional[int] = None) -> bool:
    """Whether the word is part of some free basis."""
    return not word.is_identity() and whitehead_minimize(word, rank)[0] == 1
