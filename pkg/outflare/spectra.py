"""Transition matrices of rose maps and their Perron-Frobenius data."""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import networkx as nx
import numpy as np

from outflare.automorphisms import Automorphism
from outflare.const import DEFAULT_WORD_BUDGET
from outflare.words import Letter, Word, cyclic_core, letter_key


class ReducibleMatrixError(ValueError):
    """Power iteration needs an irreducible matrix."""

    def __init__(self, components: list[frozenset[int]]) -> None:
        listed = ", ".join("{" + ", ".join(str(i + 1) for i in sorted(c)) + "}" for c in components)
        super().__init__(f"Matrix is reducible, strongly connected components: {listed}")
        self.components = components


class PowerIterationError(RuntimeError):
    """Power iteration hit its iteration cap."""

    def __init__(self, iterations: int, residual: float) -> None:
        super().__init__(f"No convergence after {iterations} iterations, residual {residual:.3g}")
        self.iterations = iterations
        self.residual = residual


class TransitionMatrix:
    """Nonnegative integer matrix; entry (i, j) counts a_i^{+-1} in Phi(a_j)."""

    def __init__(self, entries: "np.typing.ArrayLike") -> None:
        matrix = np.array(entries, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Transition matrix must be square, got shape {matrix.shape}")
        if (matrix < 0).any():
            raise ValueError("Transition matrix entries must be nonnegative")
        matrix.setflags(write=False)
        self.__matrix = matrix

    @property
    def matrix(self) -> np.ndarray:
        return self.__matrix

    @property
    def size(self) -> int:
        return int(self.__matrix.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        return bool(np.array_equal(self.__matrix, other.matrix))

    def __repr__(self) -> str:
        return f"TransitionMatrix({self.__matrix.tolist()})"

    def column_sums(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.__matrix.sum(axis=0))

    def components(self) -> list[frozenset[int]]:
        """Strongly connected components of the digraph j -> i for each positive entry (i, j).

        :return: Components sorted by smallest index
        :rtype: list
        """
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.size))
        rows, columns = np.nonzero(self.__matrix)
        graph.add_edges_from((int(j), int(i)) for i, j in zip(rows, columns))
        components = [frozenset(c) for c in nx.strongly_connected_components(graph)]
        return sorted(components, key=min)

    def is_irreducible(self) -> bool:
        return len(self.components()) == 1

    def is_primitive(self) -> bool:
        """Whether some power up to the Wielandt bound (N-1)^2+1 is entrywise positive."""
        if not self.is_irreducible():
            return False
        pattern = (self.__matrix > 0).astype(np.int64)
        reached = pattern.copy()
        for _ in range((self.size - 1) ** 2):
            reached = np.minimum(reached @ pattern, 1)
        return bool((reached > 0).all())


def transition_matrix(automorphism: Automorphism) -> TransitionMatrix:
    """Letter counts of the generator images, ignoring signs."""
    rank = automorphism.rank
    entries = np.zeros((rank, rank), dtype=np.int64)
    for column, image in enumerate(automorphism.images):
        for letter in image.letters:
            entries[abs(letter) - 1, column] += 1
    return TransitionMatrix(entries)


@dataclass(frozen=True)
class SpectralData:
    eigenvalue: float
    eigenvector: tuple[float, ...]
    iterations: int
    residual: float
    irreducible: bool = True
    primitive: bool = True
    # Collatz-Wielandt bounds min and max of (Mv)_i / v_i at the last iterate
    lower_bound: float = 0.0
    upper_bound: float = math.inf
    bracket_history: tuple[float, ...] = field(default=(), repr=False, compare=False)

    @property
    def bracket_width(self) -> float:
        return self.upper_bound - self.lower_bound


def _rayleigh_quotient(matrix: np.ndarray, vector: np.ndarray) -> float:
    return float(matrix.dot(vector).dot(vector) / vector.dot(vector))


def pf_eigen(
    transition: TransitionMatrix, tol: float = 1e-10, max_iter: int = 100_000
) -> SpectralData:
    """Perron-Frobenius eigenvalue and eigenvector by power iteration from the uniform vector.

    Imprimitive irreducible matrices are iterated as M + I and the eigenvalue shifted back.

    :param TransitionMatrix transition: Irreducible matrix
    :param float tol: Stop when successive Rayleigh quotients differ by less
    :param int max_iter: Iteration cap
    :return: Eigenvalue, eigenvector normalised to sum one, residual |Mv - lambda v|_1 and
        the bracket of M on each iterate, whose width never grows
    :rtype: SpectralData
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    components = transition.components()
    if len(components) != 1:
        raise ReducibleMatrixError(components)
    primitive = transition.is_primitive()
    matrix = transition.matrix.astype(float)
    shift = 0.0 if primitive else 1.0
    iterated = matrix + shift * np.eye(transition.size)

    vector = np.full(transition.size, 1.0 / transition.size)
    previous = _rayleigh_quotient(iterated, vector)
    history: list[float] = []
    residual = float("inf")
    for iteration in range(1, max_iter + 1):
        image = iterated.dot(vector)
        vector = image / image.sum()
        quotient = _rayleigh_quotient(iterated, vector)
        eigenvalue = quotient - shift
        residual = float(np.abs(matrix.dot(vector) - eigenvalue * vector).sum())
        ratios = matrix.dot(vector) / vector
        lower, upper = float(ratios.min()), float(ratios.max())
        history.append(upper - lower)
        if abs(quotient - previous) < tol:
            logging.debug(f"Power iteration converged after {iteration} iterations")
            return SpectralData(
                eigenvalue=eigenvalue,
                eigenvector=tuple(float(x) for x in vector),
                iterations=iteration,
                residual=residual,
                irreducible=True,
                primitive=primitive,
                lower_bound=lower,
                upper_bound=upper,
                bracket_history=tuple(history),
            )
        previous = quotient
    raise PowerIterationError(max_iter, residual)


@dataclass(frozen=True)
class TrainTrackReport:
    is_train_track: bool
    illegal_turn: Optional[tuple[Letter, Letter]] = None


def _turn(first: Letter, second: Letter) -> tuple[Letter, Letter]:
    return (first, second) if letter_key(first) <= letter_key(second) else (second, first)


def is_train_track_on_rose(automorphism: Automorphism) -> TrainTrackReport:
    """Decide whether the rose map is a train track.

    A turn is illegal when some iterate of the derivative map collapses it. The map is a train
    track iff every turn crossed by a generator image is legal.

    :param Automorphism automorphism: The rose map
    :return: Verdict with an illegal turn as witness
    :rtype: TrainTrackReport
    """
    derivative: dict[Letter, Letter] = {}
    for generator, image in enumerate(automorphism.images, start=1):
        if image.is_identity():
            raise ValueError(f"Generator {generator} has trivial image")
        derivative[generator] = image.letters[0]
        derivative[-generator] = -image.letters[-1]

    taken: set[tuple[Letter, Letter]] = set()
    for image in automorphism.images:
        for first, second in zip(image.letters, image.letters[1:]):
            taken.add(_turn(-first, second))

    for turn in sorted(taken, key=lambda t: (letter_key(t[0]), letter_key(t[1]))):
        seen: set[tuple[Letter, Letter]] = set()
        current = turn
        while current not in seen:
            if current[0] == current[1]:
                logging.debug(f"Turn {turn} degenerates under the derivative map")
                return TrainTrackReport(False, turn)
            seen.add(current)
            current = _turn(derivative[current[0]], derivative[current[1]])
    return TrainTrackReport(True)


@dataclass(frozen=True)
class GrowthRate:
    ratios: tuple[float, ...]
    estimate: float


def growth_rate(
    automorphism: Automorphism,
    word: Word,
    iterations: int,
    max_length: int = DEFAULT_WORD_BUDGET,
) -> GrowthRate:
    """Ratios of successive cyclic lengths ||Phi^{k+1}(w)|| / ||Phi^k(w)||.

    :param Automorphism automorphism: The automorphism
    :param Word word: Nontrivial start
    :param int iterations: Number of ratios, at least 2
    :param int max_length: Stop early once the iterate is longer than this
    :return: Ratios and the last one as estimate
    :rtype: GrowthRate
    """
    if word.is_identity():
        raise ValueError("Growth rate needs a nontrivial word")
    if iterations < 2:
        raise ValueError(f"At least 2 iterations needed, got {iterations}")
    current = cyclic_core(word)
    ratios: list[float] = []
    for _ in range(iterations):
        image = cyclic_core(automorphism.apply(current))
        ratios.append(len(image) / len(current))
        current = image
        if len(current) > max_length:
            logging.warning(f"Growth rate stopped after {len(ratios)} ratios at the word budget")
            break
    return GrowthRate(tuple(ratios), ratios[-1])


def estimate_stretch(automorphism: Automorphism, iterations: int = 40) -> float:
    """Stretch factor: PF eigenvalue of a train track rose map, else the growth rate of a_1.

    :param Automorphism automorphism: The automorphism
    :param int iterations: Growth rate iterations for the fallback
    :return: Estimate
    :rtype: float
    """
    transition = transition_matrix(automorphism)
    if is_train_track_on_rose(automorphism).is_train_track and transition.is_irreducible():
        return pf_eigen(transition).eigenvalue
    logging.info(f"{automorphism.name or 'Automorphism'} is not a rose train track, using growth")
    return growth_rate(automorphism, Word((1,)), iterations).estimate
