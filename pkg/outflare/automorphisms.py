"""Automorphisms of a free group given by generator images and verified inverse images."""

from dataclasses import InitVar, dataclass, field
from functools import cached_property
from typing import Optional, Sequence

from outflare.words import (
    CyclicWord,
    Letter,
    RankMismatchError,
    Word,
    cyclic_canonical,
    cyclic_core,
    parse_word,
)


class AutomorphismError(ValueError):
    """Images and inverse images do not compose to the identity."""

    def __init__(self, name: str, generator: Optional[int], reason: str = "") -> None:
        label = name or "automorphism"
        if generator is not None:
            message = f"{label}: composition fails on generator {generator}"
        else:
            message = f"{label}: {reason}"
        super().__init__(message)
        self.name = name
        self.generator = generator


def _substitute(images: Sequence[Word], word: Word) -> Word:
    out: list[Letter] = []
    for letter in word.letters:
        image = images[letter - 1].letters if letter > 0 else images[-letter - 1].inverse().letters
        for y in image:
            if out and out[-1] == -y:
                out.pop()
            else:
                out.append(y)
    return Word(tuple(out))


def failing_generator(images: Sequence[Word], inverse_images: Sequence[Word]) -> Optional[int]:
    """First generator (1-based) on which either composition is not the identity.

    :param images: Generator images
    :param inverse_images: Claimed inverse images
    :return: Generator index or None
    :rtype: int
    """
    rank = len(images)
    for generator in range(1, rank + 1):
        expected = Word((generator,))
        if _substitute(images, inverse_images[generator - 1]) != expected:
            return generator
        if _substitute(inverse_images, images[generator - 1]) != expected:
            return generator
    return None


def verify_automorphism(images: Sequence[Word], inverse_images: Sequence[Word]) -> bool:
    """Whether both compositions fix every generator.

    :param images: Generator images
    :param inverse_images: Claimed inverse images
    :return: Verified
    :rtype: bool
    """
    if len(images) != len(inverse_images):
        return False
    rank = len(images)
    if any(w.max_generator() > rank for w in list(images) + list(inverse_images)):
        return False
    return failing_generator(images, inverse_images) is None


@dataclass(frozen=True)
class Automorphism:
    """An element of Aut(F_N); acts on conjugacy classes as its outer class."""

    images: tuple[Word, ...]
    inverse_images: tuple[Word, ...]
    name: str = field(default="", compare=False)
    verify: InitVar[bool] = True

    def __post_init__(self, verify: bool) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "inverse_images", tuple(self.inverse_images))
        rank = len(self.images)
        if rank < 2:
            raise AutomorphismError(self.name, None, "rank must be at least 2")
        if len(self.inverse_images) != rank:
            raise AutomorphismError(self.name, None, "images and inverse images differ in count")
        for word in self.images + self.inverse_images:
            if word.max_generator() > rank:
                raise RankMismatchError(rank, word.max_generator())
        if verify:
            generator = failing_generator(self.images, self.inverse_images)
            if generator is not None:
                raise AutomorphismError(self.name, generator)

    @property
    def rank(self) -> int:
        return len(self.images)

    @cached_property
    def _letter_images(self) -> dict[Letter, tuple[Letter, ...]]:
        table: dict[Letter, tuple[Letter, ...]] = {}
        for generator, image in enumerate(self.images, start=1):
            table[generator] = image.letters
            table[-generator] = image.inverse().letters
        return table

    def apply(self, word: Word) -> Word:
        """Substitute generator images and freely reduce.

        :param Word word: The word
        :return: Image
        :rtype: Word
        """
        if word.max_generator() > self.rank:
            raise RankMismatchError(self.rank, word.max_generator())
        table = self._letter_images
        out: list[Letter] = []
        for letter in word.letters:
            for y in table[letter]:
                if out and out[-1] == -y:
                    out.pop()
                else:
                    out.append(y)
        return Word(tuple(out))

    def apply_cyclic(self, cyclic: CyclicWord) -> CyclicWord:
        """Image of a conjugacy class."""
        return cyclic_canonical(self.apply(cyclic.as_word()))[0]

    def is_identity(self) -> bool:
        return all(image.letters == (i,) for i, image in enumerate(self.images, start=1))

    def __str__(self) -> str:
        images = ", ".join(
            f"{Word((i,))}->{image}" for i, image in enumerate(self.images, start=1)
        )
        return f"{self.name or 'automorphism'}: {images}"


def identity(rank: int) -> Automorphism:
    generators = tuple(Word((i,)) for i in range(1, rank + 1))
    return Automorphism(generators, generators, name="id", verify=False)


def inverse(automorphism: Automorphism) -> Automorphism:
    """Swap images and inverse images."""
    name = automorphism.name
    if name.endswith("^-1"):
        name = name[: -len("^-1")]
    elif name:
        name = f"{name}^-1"
    return Automorphism(automorphism.inverse_images, automorphism.images, name=name, verify=False)


def compose(phi: Automorphism, psi: Automorphism) -> Automorphism:
    """The automorphism w -> phi(psi(w)).

    :param Automorphism phi: Applied second
    :param Automorphism psi: Applied first
    :return: Composite, with inverse images composed in the opposite order
    :rtype: Automorphism
    """
    if phi.rank != psi.rank:
        raise RankMismatchError(phi.rank, psi.rank)
    images = tuple(phi.apply(image) for image in psi.images)
    psi_inverse = inverse(psi)
    inverse_images = tuple(psi_inverse.apply(image) for image in phi.inverse_images)
    name = f"{phi.name}*{psi.name}" if phi.name and psi.name else ""
    return Automorphism(images, inverse_images, name=name, verify=False)


def power(automorphism: Automorphism, exponent: int) -> Automorphism:
    """Integer power by repeated squaring; negative exponents use the inverse images.

    :param Automorphism automorphism: Base
    :param int exponent: Exponent
    :return: Power
    :rtype: Automorphism
    """
    base = automorphism if exponent >= 0 else inverse(automorphism)
    remaining = abs(exponent)
    result = identity(automorphism.rank)
    while remaining:
        if remaining & 1:
            result = compose(result, base)
        remaining >>= 1
        if remaining:
            base = compose(base, base)
    if automorphism.name and exponent not in (0, 1):
        result = Automorphism(
            result.images,
            result.inverse_images,
            name=f"{automorphism.name}^{exponent}",
            verify=False,
        )
    elif exponent == 1:
        result = automorphism
    return result


def conjugate(automorphism: Automorphism, by: Automorphism) -> Automorphism:
    """The conjugate by * automorphism * by^-1."""
    result = compose(by, compose(automorphism, inverse(by)))
    name = f"{by.name}({automorphism.name})" if by.name and automorphism.name else ""
    return Automorphism(result.images, result.inverse_images, name=name, verify=False)


def permutation(images: Sequence[int], name: str = "") -> Automorphism:
    """Signed permutation of the basis.

    :param images: Signed generator index for each generator
    :param str name: Name
    :return: Automorphism
    :rtype: Automorphism
    """
    rank = len(images)
    forward = [Word((x,)) for x in images]
    backward: list[Word] = [Word() for _ in range(rank)]
    for generator, target in enumerate(images, start=1):
        backward[abs(target) - 1] = Word((generator if target > 0 else -generator,))
    return Automorphism(tuple(forward), tuple(backward), name=name)


def from_literals(
    images: Sequence[str], inverse_images: Sequence[str], name: str = ""
) -> Automorphism:
    """Build and verify an automorphism from word literals.

    :param images: Image literals, one per generator
    :param inverse_images: Inverse image literals
    :param str name: Name
    :return: Verified automorphism
    :rtype: Automorphism
    """
    rank = len(images)
    return Automorphism(
        tuple(parse_word(text, rank) for text in images),
        tuple(parse_word(text, rank) for text in inverse_images),
        name=name,
    )


def orbit(automorphism: Automorphism, word: Word, steps: int) -> list[CyclicWord]:
    """Conjugacy classes of Phi^k(word) for k = 0..steps.

    :param Automorphism automorphism: Automorphism
    :param Word word: Start
    :param int steps: Number of applications
    :return: Classes
    :rtype: list
    """
    classes = [cyclic_canonical(word)[0]]
    current = cyclic_core(word)
    for _ in range(steps):
        current = cyclic_core(automorphism.apply(current))
        classes.append(cyclic_canonical(current)[0])
    return classes
