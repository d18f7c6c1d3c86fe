"""Rational geodesic currents and their truncated weight systems."""

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from outflare.automorphisms import Automorphism
from outflare.words import (
    CyclicWord,
    RankMismatchError,
    Word,
    cyclic_canonical,
    format_word,
    parse_word,
    reduced_words,
    unoriented,
)

Coefficient = Union[Fraction, int, str]


class ZeroCurrentError(ValueError):
    """An operation needs a nonzero current or weight system."""


@dataclass(frozen=True)
class RationalCurrent:
    """A finite sum of counting currents with positive rational coefficients.

    Classes are stored once per pair {[g], [g^-1]}, sorted by length then lexicographically.
    """

    terms: tuple[tuple[Fraction, CyclicWord], ...] = ()

    def __post_init__(self) -> None:
        seen = set()
        for coefficient, cyclic in self.terms:
            if coefficient <= 0:
                raise ValueError(f"Coefficients must be positive, got {coefficient}")
            if len(cyclic) == 0:
                raise ValueError("The identity class carries no current")
            if cyclic in seen:
                raise ValueError(f"Repeated class {cyclic}")
            seen.add(cyclic)

    @classmethod
    def from_terms(
        cls, terms: Iterable[tuple[Coefficient, Union[Word, CyclicWord]]]
    ) -> "RationalCurrent":
        """Merge raw terms into a current.

        :param terms: Coefficient and word pairs
        :return: Current
        :rtype: RationalCurrent
        """
        merged: dict[CyclicWord, Fraction] = defaultdict(Fraction)
        for coefficient, word in terms:
            coefficient = Fraction(coefficient)
            if coefficient < 0:
                raise ValueError(f"Negative coefficient {coefficient}")
            if coefficient == 0:
                continue
            if isinstance(word, CyclicWord):
                word = word.as_word()
            cyclic = cyclic_canonical(word)[0]
            if len(cyclic) == 0:
                raise ValueError("The identity class carries no current")
            merged[unoriented(cyclic)] += coefficient
        ordered = sorted(merged.items(), key=lambda item: item[0].sort_key())
        return cls(tuple((coefficient, cyclic) for cyclic, coefficient in ordered))

    def is_zero(self) -> bool:
        return not self.terms

    def max_generator(self) -> int:
        return max((cyclic.max_generator() for _, cyclic in self.terms), default=0)

    def max_class_length(self) -> int:
        return max((len(cyclic) for _, cyclic in self.terms), default=0)

    def scaled(self, factor: Coefficient) -> "RationalCurrent":
        return RationalCurrent.from_terms((c * Fraction(factor), w) for c, w in self.terms)

    def __add__(self, other: "RationalCurrent") -> "RationalCurrent":
        return RationalCurrent.from_terms(self.terms + other.terms)

    def __str__(self) -> str:
        return format_current(self)


def counting_current(word: Word, coefficient: Coefficient = 1) -> RationalCurrent:
    """The current c * eta_g of a nontrivial element."""
    return RationalCurrent.from_terms([(coefficient, word)])


def linear_combine(pairs: Iterable[tuple[Coefficient, RationalCurrent]]) -> RationalCurrent:
    """Nonnegative linear combination of currents.

    :param pairs: Coefficient and current pairs
    :return: Merged current
    :rtype: RationalCurrent
    """
    terms: list[tuple[Fraction, CyclicWord]] = []
    for coefficient, current in pairs:
        coefficient = Fraction(coefficient)
        if coefficient < 0:
            raise ValueError(f"Negative coefficient {coefficient}")
        terms.extend((coefficient * c, cyclic) for c, cyclic in current.terms)
    return RationalCurrent.from_terms(terms)


def push_forward(automorphism: Automorphism, current: RationalCurrent) -> RationalCurrent:
    """Left action: each eta_g maps to eta_Phi(g)."""
    if current.max_generator() > automorphism.rank:
        raise RankMismatchError(automorphism.rank, current.max_generator())
    return RationalCurrent.from_terms(
        (coefficient, automorphism.apply(cyclic.as_word())) for coefficient, cyclic in current.terms
    )


def _inverse_key(key: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(key))


def is_representative(word: Word) -> bool:
    """Whether the word is the chosen one of the pair {v, v^-1}."""
    return word.sort_key() <= word.inverse().sort_key()


@dataclass(frozen=True)
class WeightSystem:
    """Weights <v, mu> of all reduced words of length 1..truncation; absent words weigh zero."""

    rank: int
    truncation: int
    weights: dict[Word, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.truncation < 1:
            raise ValueError(f"Truncation must be at least 1, got {self.truncation}")
        cleaned: dict[Word, Fraction] = {}
        for word, value in self.weights.items():
            value = Fraction(value)
            if not 1 <= len(word) <= self.truncation:
                raise ValueError(f"Word {word} outside truncation {self.truncation}")
            if word.max_generator() > self.rank:
                raise RankMismatchError(self.rank, word.max_generator())
            if value < 0:
                raise ValueError(f"Negative weight {value} on {word}")
            if value:
                cleaned[word] = value
        object.__setattr__(self, "weights", cleaned)

    def weight(self, word: Word) -> Fraction:
        return self.weights.get(word, Fraction(0))

    def total_length(self) -> Fraction:
        """Sum of the generator weights, equal to <T_A, mu>."""
        return sum((self.weight(Word((g,))) for g in range(1, self.rank + 1)), Fraction(0))

    def scaled(self, factor: Coefficient) -> "WeightSystem":
        factor = Fraction(factor)
        return WeightSystem(
            self.rank, self.truncation, {w: v * factor for w, v in self.weights.items()}
        )

    def normalized(self) -> "WeightSystem":
        total = self.total_length()
        if total == 0:
            raise ZeroCurrentError("Cannot normalise the zero weight system")
        return self.scaled(1 / total)

    def vector(self) -> dict[Word, Fraction]:
        """Weights on one representative of each pair {v, v^-1}."""
        return {w: v for w, v in self.weights.items() if is_representative(w)}


def counting_weights(
    current: RationalCurrent, truncation: int, rank: Optional[int] = None
) -> WeightSystem:
    """Count occurrences of v and v^-1 around each cyclic word.

    :param RationalCurrent current: The current
    :param int truncation: Longest word weighed
    :param int rank: Ambient rank, defaults to the largest generator used
    :return: Exact weight system
    :rtype: WeightSystem
    """
    if truncation < 1:
        raise ValueError(f"Truncation must be at least 1, got {truncation}")
    rank = max(rank or 0, current.max_generator(), 2)
    totals: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
    for coefficient, cyclic in current.terms:
        letters = cyclic.letters
        n = len(letters)
        extended = letters * (truncation // n + 2)
        occurrences: Counter[tuple[int, ...]] = Counter()
        for length in range(1, truncation + 1):
            for start in range(n):
                occurrences[extended[start : start + length]] += 1
        for key, count in occurrences.items():
            totals[key] += coefficient * count
            totals[_inverse_key(key)] += coefficient * count
    return WeightSystem(rank, truncation, {Word(key): value for key, value in totals.items()})


@dataclass(frozen=True)
class KirchhoffViolation:
    word: Word
    side: str
    deficit: Fraction


@dataclass(frozen=True)
class KirchhoffReport:
    violations: tuple[KirchhoffViolation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def validate_kirchhoff(system: WeightSystem) -> KirchhoffReport:
    """Check flip symmetry and both one-sided extension equations exactly.

    :param WeightSystem system: Weights to check
    :return: Report listing every violated equation
    :rtype: KirchhoffReport
    """
    violations: list[KirchhoffViolation] = []
    letters = [x for g in range(1, system.rank + 1) for x in (g, -g)]
    for length in range(1, system.truncation + 1):
        for word in reduced_words(system.rank, length):
            value = system.weight(word)
            if is_representative(word):
                flipped = system.weight(word.inverse())
                if value != flipped:
                    violations.append(KirchhoffViolation(word, "flip", value - flipped))
            if length == system.truncation:
                continue
            last, first = word.letters[-1], word.letters[0]
            right = sum(
                (system.weight(Word(word.letters + (x,))) for x in letters if x != -last),
                Fraction(0),
            )
            left = sum(
                (system.weight(Word((x,) + word.letters)) for x in letters if x != -first),
                Fraction(0),
            )
            if value != right:
                violations.append(KirchhoffViolation(word, "right", value - right))
            if value != left:
                violations.append(KirchhoffViolation(word, "left", value - left))
    return KirchhoffReport(tuple(violations))


def projective_distance(first: WeightSystem, second: WeightSystem) -> float:
    """L1 distance after normalising each system to total length one.

    :param WeightSystem first: First system
    :param WeightSystem second: Second system
    :return: Distance, zero iff projectively equal at this truncation
    :rtype: float
    """
    if first.truncation != second.truncation:
        raise ValueError(f"Truncations differ: {first.truncation} and {second.truncation}")
    if first.total_length() == 0 or second.total_length() == 0:
        raise ZeroCurrentError("Projective distance needs nonzero weight systems")
    left = first.normalized().vector()
    right = second.normalized().vector()
    zero = Fraction(0)
    gaps = (abs(left.get(w, zero) - right.get(w, zero)) for w in left.keys() | right.keys())
    return float(sum(gaps, zero))


def parse_current(text: str, rank: Optional[int] = None) -> RationalCurrent:
    """Parse ``coefficient word`` lines, e.g. ``3/2 abAB``; a bare word has coefficient one.

    :param str text: Lines
    :param int rank: Rank to check against
    :return: Current
    :rtype: RationalCurrent
    """
    terms: list[tuple[Fraction, Word]] = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            coefficient, literal = "1", parts[0]
        elif len(parts) == 2:
            coefficient, literal = parts
        else:
            raise ValueError(f"Line {number}: expected 'coefficient word', got '{line}'")
        try:
            terms.append((Fraction(coefficient), parse_word(literal, rank)))
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Line {number}: {e}") from e
    return RationalCurrent.from_terms(terms)


def format_current(current: RationalCurrent) -> str:
    return "\n".join(f"{c} {format_word(w.as_word())}" for c, w in current.terms)
