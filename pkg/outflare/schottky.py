"""Flare certificates, witness searches, and the ping-pong and stretch-sign experiments."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Optional, Sequence, Union

from outflare.automorphisms import Automorphism, compose, identity, inverse, power
from outflare.currents import (
    RationalCurrent,
    WeightSystem,
    counting_weights,
    projective_distance,
    push_forward,
)
from outflare.dynamics import eigencurrent_approx
from outflare.intersection import HeightContext, NeighborhoodClass, classify_neighborhood
from outflare.whitehead import is_primitive
from outflare.words import (
    CyclicWord,
    Word,
    cyclic_canonical,
    cyclic_length,
    cyclic_words,
    format_word,
    is_conjugate,
)

# An element flares on w when it at least doubles the cyclic length of w
FLARE_FACTOR = 2
PASS_COUNT = 3
STRETCH_SIGN_WORD_BUDGET = 20_000


class GeographyError(ValueError):
    """The four attracting points are too close for disjoint balls of the requested radius."""


def flare_count(powers: Sequence[Automorphism], word: Word) -> int:
    """How many of the given automorphisms at least double the cyclic length of the word."""
    target = FLARE_FACTOR * cyclic_length(word)
    return sum(1 for alpha in powers if cyclic_length(alpha.apply(word)) >= target)


def flare_powers(phi: Automorphism, psi: Automorphism, n: int, m: int) -> list[Automorphism]:
    return [power(phi, n), power(psi, m), power(phi, -n), power(psi, -m)]


@dataclass(frozen=True)
class FlareCertificate:
    phi: str
    psi: str
    n: int
    m: int
    rank: int
    radius: int
    words_checked: int
    worst_word: CyclicWord
    worst_count: int
    passed: bool
    # Per cyclic length 1..radius: classes checked and the worst count among them
    length_checked: tuple[int, ...] = ()
    length_worst: tuple[int, ...] = ()


def _flare_length(job: tuple[list[Automorphism], int, int]) -> tuple[int, int, CyclicWord]:
    powers, rank, length = job
    checked = 0
    worst_count = len(powers) + 1
    worst_word = CyclicWord(())
    for cyclic in cyclic_words(rank, length, min_length=length):
        checked += 1
        count = flare_count(powers, cyclic.as_word())
        if count < worst_count:
            worst_count, worst_word = count, cyclic
    return checked, worst_count, worst_word


def flare_certify(
    phi: Automorphism,
    psi: Automorphism,
    n: int,
    m: int,
    radius: int,
    threads: int = 1,
) -> FlareCertificate:
    """Check the "3 out of 4" flare condition on every conjugacy class in the ball.

    The ball is split by cyclic length across worker processes; the worst word is the first
    one with the smallest count in enumeration order, whatever the thread count.

    :param Automorphism phi: First automorphism
    :param Automorphism psi: Second automorphism
    :param int n: Exponent of phi
    :param int m: Exponent of psi
    :param int radius: Largest cyclic length checked
    :param int threads: Worker processes
    :return: Certificate
    :rtype: FlareCertificate
    """
    if n < 1 or m < 1:
        raise ValueError(f"Exponents must be at least 1, got n={n}, m={m}")
    if radius < 1:
        raise ValueError(f"Radius must be at least 1, got {radius}")
    if phi.rank != psi.rank:
        raise ValueError(f"Ranks differ: {phi.rank} and {psi.rank}")
    powers = flare_powers(phi, psi, n, m)
    jobs = [(powers, phi.rank, length) for length in range(1, radius + 1)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_flare_length, jobs))
    else:
        results = [_flare_length(job) for job in jobs]

    words_checked = 0
    worst_count = len(powers) + 1
    worst_word = CyclicWord(())
    for length, (checked, count, word) in enumerate(results, start=1):
        logging.debug(f"Length {length}: {checked} words, worst count {count}")
        words_checked += checked
        if count < worst_count:
            worst_count, worst_word = count, word
    return FlareCertificate(
        phi=phi.name,
        psi=psi.name,
        n=n,
        m=m,
        rank=phi.rank,
        radius=radius,
        words_checked=words_checked,
        worst_word=worst_word,
        worst_count=worst_count,
        passed=worst_count >= PASS_COUNT,
        length_checked=tuple(checked for checked, _, _ in results),
        length_worst=tuple(count for _, count, _ in results),
    )


class WitnessKind(Enum):
    TOROIDAL = "toroidal"
    RANK1_INVARIANT = "rank1-invariant"


@dataclass(frozen=True)
class Witness:
    """A class w with Phi^k(w) conjugate to w (toroidal) or to w^+-1 for primitive w."""

    kind: WitnessKind
    power: int
    word: CyclicWord
    detail: str

    def replay(self, automorphism: Automorphism) -> bool:
        image = power(automorphism, self.power).apply(self.word.as_word())
        word = self.word.as_word()
        if self.kind is WitnessKind.TOROIDAL:
            return is_conjugate(image, word)
        return is_primitive(word, automorphism.rank) and (
            is_conjugate(image, word) or is_conjugate(image, word.inverse())
        )


@dataclass(frozen=True)
class NoneFound:
    """No witness up to the searched bounds; not a proof of absence."""

    max_power: int
    radius: int
    words_searched: int


SearchResult = Union[Witness, NoneFound]


def atoroidal_search(automorphism: Automorphism, max_power: int, radius: int) -> SearchResult:
    """First (k, w) in lexicographic order with Phi^k(w) conjugate to w.

    :param Automorphism automorphism: The automorphism
    :param int max_power: Largest power k tried
    :param int radius: Largest cyclic length of w
    :return: Witness with the conjugator as detail, or the searched bounds
    """
    ball = list(cyclic_words(automorphism.rank, radius))
    iterate = identity(automorphism.rank)
    for k in range(1, max_power + 1):
        iterate = compose(automorphism, iterate)
        for cyclic in ball:
            image, conjugator = cyclic_canonical(iterate.apply(cyclic.as_word()))
            if image == cyclic:
                logging.info(f"Periodic class {cyclic} at power {k}")
                return Witness(WitnessKind.TOROIDAL, k, cyclic, format_word(conjugator))
    return NoneFound(max_power, radius, len(ball))


def rank1_invariant_factor_search(
    automorphism: Automorphism, max_power: int, radius: int
) -> SearchResult:
    """First (k, w) with w primitive and Phi^k(w) conjugate to w or w^-1.

    :param Automorphism automorphism: The automorphism
    :param int max_power: Largest power k tried
    :param int radius: Largest cyclic length of w
    :return: Witness with the sign as detail, or the searched bounds
    """
    rank = automorphism.rank
    ball = [c for c in cyclic_words(rank, radius) if is_primitive(c.as_word(), rank)]
    iterate = identity(rank)
    for k in range(1, max_power + 1):
        iterate = compose(automorphism, iterate)
        for cyclic in ball:
            image = cyclic_canonical(iterate.apply(cyclic.as_word()))[0]
            if image == cyclic:
                return Witness(WitnessKind.RANK1_INVARIANT, k, cyclic, "+")
            if image == cyclic.inverse():
                return Witness(WitnessKind.RANK1_INVARIANT, k, cyclic, "-")
    return NoneFound(max_power, radius, len(ball))


@dataclass(frozen=True)
class HyperbolicityReport:
    power: int
    stretch: float
    words_checked: int
    worst_word: CyclicWord
    worst_ratio: float
    passed: bool


def hyperbolicity_certify(
    automorphism: Automorphism, power_m: int, stretch: float, radius: int
) -> HyperbolicityReport:
    """Check stretch * ||w|| <= max(||Phi^M(w)||, ||Phi^-M(w)||) on the ball of radius R.

    A pass only covers the ball, it does not prove hyperbolicity.

    :param Automorphism automorphism: The automorphism
    :param int power_m: The power M
    :param float stretch: Required stretch, greater than one
    :param int radius: Largest cyclic length checked
    :return: Report with the worst ratio found
    :rtype: HyperbolicityReport
    """
    if power_m < 1 or radius < 1:
        raise ValueError(f"Power and radius must be at least 1, got {power_m} and {radius}")
    if stretch <= 1:
        raise ValueError(f"Stretch must exceed 1, got {stretch}")
    forward = power(automorphism, power_m)
    backward = power(automorphism, -power_m)
    checked = 0
    worst_ratio = float("inf")
    worst_word = CyclicWord(())
    for cyclic in cyclic_words(automorphism.rank, radius):
        checked += 1
        word = cyclic.as_word()
        longest = max(cyclic_length(forward.apply(word)), cyclic_length(backward.apply(word)))
        ratio = longest / len(cyclic)
        if ratio < worst_ratio:
            worst_ratio, worst_word = ratio, cyclic
    return HyperbolicityReport(
        power_m, stretch, checked, worst_word, worst_ratio, worst_ratio >= stretch
    )


def word_automorphism(phi: Automorphism, psi: Automorphism, middle: Word) -> Automorphism:
    """Evaluate a word in a = phi and b = psi as a composite automorphism."""
    if middle.max_generator() > 2:
        raise ValueError(f"Word {middle} uses letters other than a and b")
    factors = {1: phi, -1: inverse(phi), 2: psi, -2: inverse(psi)}
    result = identity(phi.rank)
    for letter in middle.letters:
        result = compose(result, factors[letter])
    return result


@dataclass(frozen=True)
class StretchSignReport:
    automorphism: Automorphism = field(repr=False)
    lambda_estimate: float
    converged: bool
    iterations: int
    side: NeighborhoodClass

    @property
    def passed(self) -> bool:
        return self.lambda_estimate > 1


def stretch_sign_experiment(
    phi: Automorphism,
    psi: Automorphism,
    m: int,
    n: int,
    middle: Word,
    truncation: int,
    max_iter: int,
    tol: float,
    depth: int,
    max_length: int = STRETCH_SIGN_WORD_BUDGET,
) -> StretchSignReport:
    """Stretch estimate of W = phi^m middle phi^n and the side of its attracting current.

    :param Automorphism phi: First automorphism, the letter a of ``middle``
    :param Automorphism psi: Second automorphism, the letter b of ``middle``
    :param int m: Leading exponent of phi
    :param int n: Trailing exponent of phi
    :param Word middle: Word in a and b, neither starting nor ending with a^-1
    :param int truncation: Longest word weighed
    :param int max_iter: Iteration cap
    :param float tol: Convergence tolerance
    :param int depth: Depth of the height context of phi
    :return: Report, passing when the estimate exceeds one
    :rtype: StretchSignReport
    """
    if m < 1 or n < 1:
        raise ValueError(f"Exponents must be at least 1, got m={m}, n={n}")
    if not middle.is_identity() and -1 in (middle.letters[0], middle.letters[-1]):
        raise ValueError(f"Middle word {middle} must not start or end with A")
    composite = compose(power(phi, m), compose(word_automorphism(phi, psi, middle), power(phi, n)))
    if composite.is_identity():
        raise ValueError("The composite automorphism is the identity")
    approx = eigencurrent_approx(composite, truncation, tol, max_iter, max_length=max_length)
    assert approx.current is not None
    context = HeightContext.from_automorphism(phi, depth)
    side = classify_neighborhood(context, approx.current)
    logging.info(f"Stretch estimate {approx.lambda_estimate:.12g}, attractor in {side.value}")
    return StretchSignReport(
        composite, approx.lambda_estimate, approx.converged, approx.iterations, side
    )


GEOGRAPHY = ("N", "S", "E", "W")


@dataclass(frozen=True)
class PingPongViolation:
    seed: int
    generator: str
    step: int
    region: str


@dataclass(frozen=True)
class PingPongReport:
    delta: float
    min_separation: float
    seeds_checked: int
    violations: tuple[PingPongViolation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _region(weights: WeightSystem, centers: dict[str, WeightSystem], delta: float) -> str:
    for name in GEOGRAPHY:
        if projective_distance(weights, centers[name]) < delta:
            return name
    return "-"


def ping_pong_containment(
    phi: Automorphism,
    psi: Automorphism,
    n: int,
    m: int,
    seeds: Sequence[RationalCurrent],
    truncation: int,
    steps: int = 1,
    delta: Optional[float] = None,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> PingPongReport:
    """Check that each generator power maps everything outside its repelling ball into its
    attracting ball.

    The balls N, S, E, W are centred at the approximate attracting currents of phi, phi^-1,
    psi and psi^-1.

    :param Automorphism phi: First automorphism
    :param Automorphism psi: Second automorphism
    :param int n: Exponent of phi
    :param int m: Exponent of psi
    :param seeds: Test currents
    :param int truncation: Longest word weighed
    :param int steps: Applications of each generator power checked
    :param float delta: Ball radius, a quarter of the smallest separation by default
    :return: Report listing violations
    :rtype: PingPongReport
    """
    generators = {
        "N": power(phi, n),
        "S": power(phi, -n),
        "E": power(psi, m),
        "W": power(psi, -m),
    }
    sources = {"N": phi, "S": inverse(phi), "E": psi, "W": inverse(psi)}
    centers = {
        name: eigencurrent_approx(source, truncation, tol, max_iter).weights
        for name, source in sources.items()
    }
    separation = min(
        projective_distance(centers[first], centers[second])
        for first, second in combinations(GEOGRAPHY, 2)
    )
    if delta is None:
        delta = separation / 4
        if delta == 0:
            logging.warning("Two attracting currents coincide, geography is empty")
    elif separation < 4 * delta:
        raise GeographyError(f"Separation {separation:.6g} is below 4 * delta = {4 * delta:.6g}")
    repeller = {"N": "S", "S": "N", "E": "W", "W": "E"}
    labels = {
        "N": f"{phi.name or 'phi'}^{n}",
        "S": f"{phi.name or 'phi'}^-{n}",
        "E": f"{psi.name or 'psi'}^{m}",
        "W": f"{psi.name or 'psi'}^-{m}",
    }

    violations: list[PingPongViolation] = []
    for index, seed in enumerate(seeds):
        start = counting_weights(seed, truncation, phi.rank).normalized()
        for target, generator in generators.items():
            if delta and projective_distance(start, centers[repeller[target]]) < delta:
                continue
            current = seed
            for step in range(1, steps + 1):
                current = push_forward(generator, current)
                weights = counting_weights(current, truncation, phi.rank).normalized()
                if projective_distance(weights, centers[target]) >= delta:
                    region = _region(weights, centers, delta) if delta else "-"
                    violations.append(PingPongViolation(index, labels[target], step, region))
                    break
    logging.debug(f"Ping-pong: {len(violations)} violations over {len(seeds)} seeds")
    return PingPongReport(delta, separation, len(seeds), tuple(violations))
