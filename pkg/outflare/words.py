"""Reduced and cyclic words over a free basis.

Letters are nonzero integers: ``i`` stands for the generator a_i and ``-i`` for its inverse. The
fixed letter order is a_1 < a_1^-1 < a_2 < a_2^-1 < ...
"""

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

Letter = int

_DOTTED_TOKEN = re.compile(r"^([xX])(\d+)$")
_MAX_ALPHABETIC_RANK = 26


class RankMismatchError(ValueError):
    """A word or automorphism uses generators outside the expected rank."""

    def __init__(self, expected: int, found: int) -> None:
        super().__init__(f"Rank mismatch: expected at most {expected} generators, found {found}")
        self.expected = expected
        self.found = found


def letter_key(letter: Letter) -> int:
    """Position of a letter in the fixed letter order.

    :param int letter: The letter
    :return: Sort key
    :rtype: int
    """
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def alphabet(rank: int) -> tuple[Letter, ...]:
    """All letters of the given rank in the fixed letter order.

    :param int rank: Rank
    :return: Letters
    :rtype: tuple
    """
    letters: list[Letter] = []
    for generator in range(1, rank + 1):
        letters.extend((generator, -generator))
    return tuple(letters)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; the empty word is the identity."""

    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        letters = self.letters
        if not isinstance(letters, tuple):
            letters = tuple(letters)
            object.__setattr__(self, "letters", letters)
        if 0 in letters:
            raise ValueError("Letter 0 is not a generator")
        for first, second in zip(letters, letters[1:]):
            if first == -second:
                raise ValueError(f"Word is not freely reduced: {letters}")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return reduce(self.letters + other.letters)

    def __str__(self) -> str:
        return format_word(self)

    def is_identity(self) -> bool:
        return not self.letters

    def inverse(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def power(self, exponent: int) -> "Word":
        """Raise to an integer power.

        :param int exponent: Exponent, may be negative
        :return: The reduced power
        :rtype: Word
        """
        base = self if exponent >= 0 else self.inverse()
        return reduce(base.letters * abs(exponent))

    def max_generator(self) -> int:
        return max((abs(x) for x in self.letters), default=0)

    def sort_key(self) -> tuple[int, ...]:
        return tuple(letter_key(x) for x in self.letters)


def reduce(raw: Iterable[Letter]) -> Word:
    """Freely reduce a sequence of letters.

    :param raw: Letters, not necessarily reduced
    :return: The unique reduced form
    :rtype: Word
    """
    stack: list[Letter] = []
    for letter in raw:
        if stack and stack[-1] == -letter:
            stack.pop()
        else:
            stack.append(letter)
    return Word(tuple(stack))


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word stored in its least rotation.

    Instances come from :func:`cyclic_canonical`; the constructor only checks cyclic reduction.
    """

    letters: tuple[Letter, ...] = ()

    def __post_init__(self) -> None:
        letters = self.letters
        if not isinstance(letters, tuple):
            object.__setattr__(self, "letters", tuple(letters))
        Word(self.letters)
        if len(self.letters) > 1 and self.letters[0] == -self.letters[-1]:
            raise ValueError(f"Word is not cyclically reduced: {self.letters}")

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return format_word(self.as_word())

    def as_word(self) -> Word:
        return Word(self.letters)

    def inverse(self) -> "CyclicWord":
        return cyclic_canonical(self.as_word().inverse())[0]

    def max_generator(self) -> int:
        return max((abs(x) for x in self.letters), default=0)

    def sort_key(self) -> tuple[int, tuple[int, ...]]:
        """Enumeration order: by length, then lexicographic."""
        return (len(self.letters), tuple(letter_key(x) for x in self.letters))


def cyclic_strip(word: Word) -> int:
    """Number of letters cancelled from each end by cyclic reduction."""
    letters = word.letters
    n = len(letters)
    k = 0
    while 2 * k + 1 < n and letters[k] == -letters[n - 1 - k]:
        k += 1
    return k


def cyclic_core(word: Word) -> Word:
    """Cyclically reduced middle of a word, in its given rotation.

    :param Word word: The word
    :return: Cyclic reduction
    :rtype: Word
    """
    k = cyclic_strip(word)
    if k == 0:
        return word
    return Word(word.letters[k : len(word.letters) - k])


def cyclic_length(word: Word) -> int:
    """Length of the cyclic reduction, i.e. the translation length on the Cayley tree."""
    return len(word.letters) - 2 * cyclic_strip(word)


def least_rotation(keys: tuple[int, ...]) -> int:
    """Smallest start index of the lexicographically least rotation, in linear time.

    :param tuple keys: Sequence to rotate
    :return: Start index
    :rtype: int
    """
    n = len(keys)
    i, j, k = 0, 1, 0
    while i < n and j < n and k < n:
        first = keys[(i + k) % n]
        second = keys[(j + k) % n]
        if first == second:
            k += 1
            continue
        if first > second:
            i += k + 1
        else:
            j += k + 1
        if i == j:
            j += 1
        k = 0
    return min(i, j)


def cyclic_canonical(word: Word) -> tuple[CyclicWord, Word]:
    """Canonical cyclic word of a conjugacy class.

    Returns ``(c, u)`` with ``word = u c u^-1`` where ``c`` is read in its stored rotation.

    :param Word word: Any reduced word
    :return: Canonical cyclic word and conjugator
    :rtype: tuple
    """
    letters = word.letters
    k = cyclic_strip(word)
    core = letters[k : len(letters) - k]
    if not core:
        return CyclicWord(()), Word(letters[:k])
    start = least_rotation(tuple(letter_key(x) for x in core))
    rotated = core[start:] + core[:start]
    return CyclicWord(rotated), Word(letters[: k + start])


def is_conjugate(u: Word, v: Word) -> bool:
    """Whether two words define the same conjugacy class."""
    if cyclic_length(u) != cyclic_length(v):
        return False
    return cyclic_canonical(u)[0] == cyclic_canonical(v)[0]


def unoriented(cyclic: CyclicWord) -> CyclicWord:
    """Representative of the unordered pair of classes {[g], [g^-1]}.

    :param CyclicWord cyclic: One of the two classes
    :return: The one that sorts first
    :rtype: CyclicWord
    """
    inverse = cyclic.inverse()
    return min(cyclic, inverse, key=CyclicWord.sort_key)


def reduced_words(rank: int, length: int) -> Iterator[Word]:
    """All reduced words of a given length, in lexicographic order.

    :param int rank: Rank
    :param int length: Word length
    :return: Iterator of words
    :rtype: Iterator
    """
    letters = alphabet(rank)

    def extend(prefix: tuple[Letter, ...]) -> Iterator[tuple[Letter, ...]]:
        if len(prefix) == length:
            yield prefix
            return
        for letter in letters:
            if prefix and prefix[-1] == -letter:
                continue
            yield from extend(prefix + (letter,))

    if length == 0:
        yield Word()
        return
    for letters_found in extend(()):
        yield Word(letters_found)


def _is_least_rotation(keys: tuple[int, ...]) -> bool:
    return all(keys <= keys[i:] + keys[:i] for i in range(1, len(keys)))


def cyclic_words(rank: int, max_length: int, min_length: int = 1) -> Iterator[CyclicWord]:
    """Canonical cyclic words ordered by length, then lexicographically.

    :param int rank: Rank
    :param int max_length: Largest cyclic length
    :param int min_length: Smallest cyclic length
    :return: Iterator of cyclic words
    :rtype: Iterator
    """
    for length in range(max(min_length, 1), max_length + 1):
        for word in reduced_words(rank, length):
            letters = word.letters
            if length > 1 and letters[0] == -letters[-1]:
                continue
            if _is_least_rotation(word.sort_key()):
                yield CyclicWord(letters)


def parse_word(text: str, rank: Optional[int] = None) -> Word:
    """Parse a word literal.

    Lowercase letters are generators, uppercase their inverses. Ranks above 26 use dotted
    ``x1.X2`` tokens. The empty string is the identity.

    :param str text: Literal
    :param int rank: Rank to check against
    :return: Reduced word
    :rtype: Word
    """
    text = text.strip()
    letters: list[Letter] = []
    if "." in text or (rank is not None and rank > _MAX_ALPHABETIC_RANK):
        for token in filter(None, text.split(".")):
            match = _DOTTED_TOKEN.match(token)
            if match is None:
                raise ValueError(f"Invalid word token '{token}' in '{text}'")
            generator = int(match.group(2))
            if generator < 1:
                raise ValueError(f"Invalid generator index in '{token}'")
            letters.append(generator if match.group(1) == "x" else -generator)
    else:
        for char in text:
            if "a" <= char <= "z":
                letters.append(ord(char) - ord("a") + 1)
            elif "A" <= char <= "Z":
                letters.append(-(ord(char) - ord("A") + 1))
            else:
                raise ValueError(f"Invalid character '{char}' in word '{text}'")
    word = reduce(letters)
    if rank is not None and word.max_generator() > rank:
        raise RankMismatchError(rank, word.max_generator())
    return word


def format_word(word: Word, rank: Optional[int] = None) -> str:
    """Format a word literal, the inverse of :func:`parse_word`.

    :param Word word: The word
    :param int rank: Rank, selects the dotted form above 26
    :return: Literal
    :rtype: str
    """
    dotted = word.max_generator() > _MAX_ALPHABETIC_RANK
    if rank is not None and rank > _MAX_ALPHABETIC_RANK:
        dotted = True
    if dotted:
        return ".".join(f"x{x}" if x > 0 else f"X{-x}" for x in word.letters)
    return "".join(
        chr(ord("a") + x - 1) if x > 0 else chr(ord("A") - x - 1) for x in word.letters
    )
