"""North-South iteration of currents and of length functions."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Optional, Sequence

from outflare.automorphisms import Automorphism, inverse
from outflare.const import DEFAULT_WORD_BUDGET, TREND_SLACK
from outflare.currents import (
    RationalCurrent,
    WeightSystem,
    ZeroCurrentError,
    counting_current,
    counting_weights,
    projective_distance,
    push_forward,
)
from outflare.intersection import (
    DEFAULT_BOUNDARY_TOLERANCE,
    DEFAULT_ZERO_THRESHOLD,
    HeightContext,
    height,
    intersect,
)
from outflare.metric_trees import TreePoint, first_increase, projective_gap, unit_rose
from outflare.spectra import estimate_stretch
from outflare.words import Word, cyclic_core

PERIOD_WINDOW = 4


@dataclass(frozen=True)
class IterationStep:
    k: int
    weights: WeightSystem
    scale_factor: float
    distance: float


@dataclass(frozen=True)
class IterationTrace:
    seed: RationalCurrent
    steps: tuple[IterationStep, ...]
    current: RationalCurrent = field(repr=False)
    truncated: bool = False


def _walk(
    automorphism: Automorphism,
    seed: RationalCurrent,
    truncation: int,
    max_length: int,
) -> Iterator[tuple[IterationStep, RationalCurrent]]:
    if seed.is_zero():
        raise ZeroCurrentError("Cannot iterate the zero current")
    rank = automorphism.rank
    rose = unit_rose(rank)
    current = seed
    previous_weights = counting_weights(seed, truncation, rank).normalized()
    previous_length = intersect(rose, seed)
    k = 0
    while True:
        k += 1
        image = push_forward(automorphism, current)
        if k > 1 and image.max_class_length() > max_length:
            logging.warning(
                f"Iteration stopped at step {k}: class length {image.max_class_length()} "
                f"exceeds the word budget {max_length}"
            )
            return
        weights = counting_weights(image, truncation, rank).normalized()
        length = intersect(rose, image)
        step = IterationStep(
            k,
            weights,
            float(length / previous_length),
            projective_distance(weights, previous_weights),
        )
        yield step, image
        current, previous_weights, previous_length = image, weights, length


def iterate_current(
    automorphism: Automorphism,
    seed: RationalCurrent,
    steps: int,
    truncation: int,
    max_length: int = DEFAULT_WORD_BUDGET,
) -> IterationTrace:
    """Push a current forward ``steps`` times, recording normalised truncations.

    :param Automorphism automorphism: The automorphism
    :param RationalCurrent seed: Nonzero start
    :param int steps: Number of iterations, at least one
    :param int truncation: Longest word weighed
    :param int max_length: Word budget for the iterated classes
    :return: Trace, flagged truncated when the budget cut it short
    :rtype: IterationTrace
    """
    if steps < 1:
        raise ValueError(f"At least one step needed, got {steps}")
    recorded: list[IterationStep] = []
    current = seed
    for step, current in _walk(automorphism, seed, truncation, max_length):
        recorded.append(step)
        if len(recorded) == steps:
            break
    return IterationTrace(seed, tuple(recorded), current, len(recorded) < steps)


@dataclass(frozen=True)
class EigencurrentApprox:
    automorphism: Automorphism
    truncation: int
    weights: WeightSystem
    lambda_estimate: float
    converged: bool
    iterations: int
    period: Optional[int] = None
    current: Optional[RationalCurrent] = field(default=None, repr=False, compare=False)
    steps: tuple[IterationStep, ...] = field(default=(), repr=False, compare=False)

    def scale_errors(self) -> tuple[float, ...]:
        """Distance of each earlier scale factor to the final stretch estimate."""
        return tuple(abs(step.scale_factor - self.lambda_estimate) for step in self.steps[:-1])


def eigencurrent_approx(
    automorphism: Automorphism,
    truncation: int,
    tol: float,
    max_iter: int,
    seed: Optional[RationalCurrent] = None,
    max_length: int = DEFAULT_WORD_BUDGET,
) -> EigencurrentApprox:
    """Approximate the attracting current by iterating until successive truncations agree.

    A trace that returns exactly to one of its last few states is reported as periodic and
    not converged.

    :param Automorphism automorphism: The automorphism
    :param int truncation: Longest word weighed
    :param float tol: Projective distance that counts as converged
    :param int max_iter: Iteration cap
    :param RationalCurrent seed: Start, eta of the first generator by default
    :param int max_length: Word budget
    :return: Normalised weights with the last scale factor as stretch estimate
    :rtype: EigencurrentApprox
    """
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    seed = seed or counting_current(Word((1,)))
    history = [counting_weights(seed, truncation, automorphism.rank).normalized()]
    recorded: list[IterationStep] = []
    current = seed
    converged = False
    period: Optional[int] = None
    for step, current in _walk(automorphism, seed, truncation, max_length):
        recorded.append(step)
        history.append(step.weights)
        if step.distance < tol:
            converged = True
            break
        for p in range(2, PERIOD_WINDOW + 1):
            # Weights are exact, a finite-order trace repeats a state exactly
            if len(history) > p and step.weights == history[-1 - p]:
                period = p
                break
        if period is not None:
            logging.info(f"Trace is periodic with period {period}")
            break
        if len(recorded) >= max_iter:
            logging.warning(f"No convergence after {max_iter} iterations")
            break
    last = recorded[-1]
    logging.debug(f"Eigencurrent after {len(recorded)} steps, stretch {last.scale_factor:.12g}")
    return EigencurrentApprox(
        automorphism=automorphism,
        truncation=truncation,
        weights=last.weights,
        lambda_estimate=last.scale_factor,
        converged=converged,
        iterations=len(recorded),
        period=period,
        current=current,
        steps=tuple(recorded),
    )


@dataclass(frozen=True)
class HeightShiftRow:
    current_id: str
    depth: int
    height_before: float
    height_after: float
    shift_residual: float


@dataclass(frozen=True)
class HeightShiftReport:
    rows: tuple[HeightShiftRow, ...]
    max_residual: float
    mean_residual: float


def height_shift_check(
    context: HeightContext,
    automorphism: Automorphism,
    currents: Sequence[tuple[str, RationalCurrent]],
) -> HeightShiftReport:
    """Residuals of the shift law f(phi mu) = f(mu) + log(lambda_+ lambda_-).

    :param HeightContext context: Approximate trees
    :param Automorphism automorphism: The automorphism applied to the currents
    :param currents: Identifier and nonzero current pairs
    :return: Per-current rows with max and mean residual
    :rtype: HeightShiftReport
    """
    rows: list[HeightShiftRow] = []
    for current_id, current in currents:
        if current.is_zero():
            raise ZeroCurrentError(f"Test current {current_id} is zero")
        before = height(context, current)
        after = height(context, push_forward(automorphism, current))
        if math.isinf(before) or math.isinf(after):
            logging.warning(f"Height of {current_id} is infinite at depth {context.depth}")
            residual = math.inf
        else:
            residual = abs(after - before - context.log_stretch_sum)
        rows.append(HeightShiftRow(current_id, context.depth, before, after, residual))
    residuals = [row.shift_residual for row in rows]
    mean = sum(residuals) / len(residuals) if residuals else 0.0
    return HeightShiftReport(tuple(rows), max(residuals, default=0.0), mean)


@dataclass(frozen=True)
class HeightShiftProfile:
    reports: tuple[HeightShiftReport, ...]

    @property
    def depths(self) -> tuple[int, ...]:
        return tuple(report.rows[0].depth for report in self.reports if report.rows)

    @property
    def max_residuals(self) -> tuple[float, ...]:
        return tuple(report.max_residual for report in self.reports)

    def first_increase(self, burn_in: int = 0, slack: float = TREND_SLACK) -> Optional[int]:
        return first_increase(self.max_residuals, burn_in, slack)


def height_shift_profile(
    automorphism: Automorphism,
    currents: Sequence[tuple[str, RationalCurrent]],
    depths: Sequence[int],
    base: Optional[TreePoint] = None,
    zero_threshold: float = DEFAULT_ZERO_THRESHOLD,
    boundary_tolerance: float = DEFAULT_BOUNDARY_TOLERANCE,
) -> HeightShiftProfile:
    """Shift law residuals at several depths with the stretch factors estimated once.

    :param Automorphism automorphism: The automorphism
    :param currents: Identifier and nonzero current pairs
    :param depths: Increasing depths of the height contexts
    :param TreePoint base: Common base point, the unit rose by default
    :return: One report per depth
    :rtype: HeightShiftProfile
    """
    if not depths or list(depths) != sorted(set(depths)):
        raise ValueError(f"Depths must be increasing, got {list(depths)}")
    stretch_plus = estimate_stretch(automorphism)
    stretch_minus = estimate_stretch(inverse(automorphism))
    reports = []
    for depth in depths:
        context = HeightContext.from_automorphism(
            automorphism,
            depth,
            base,
            stretch_plus,
            stretch_minus,
            zero_threshold=zero_threshold,
            boundary_tolerance=boundary_tolerance,
        )
        reports.append(height_shift_check(context, automorphism, currents))
    return HeightShiftProfile(tuple(reports))


def _final_weights(
    job: tuple[Automorphism, RationalCurrent, int, int, int]
) -> tuple[WeightSystem, bool]:
    automorphism, seed, steps, truncation, max_length = job
    trace = iterate_current(automorphism, seed, steps, truncation, max_length)
    return trace.steps[-1].weights, trace.truncated


@dataclass(frozen=True)
class BasinReport:
    passed: bool
    max_distance: float
    outliers: tuple[int, ...]
    # Largest distance from each seed endpoint to the others
    spread: tuple[float, ...]
    final_weights: tuple[WeightSystem, ...] = field(repr=False)


def basin_check(
    automorphism: Automorphism,
    seeds: Sequence[RationalCurrent],
    steps: int,
    truncation: int,
    tol: float,
    threads: int = 1,
    max_length: int = DEFAULT_WORD_BUDGET,
) -> BasinReport:
    """Whether all seeds are attracted to a common point.

    Seeds far from the medoid of the endpoints are reported as outliers.

    :param Automorphism automorphism: The automorphism
    :param seeds: Nonempty list of nonzero currents
    :param int steps: Iterations per seed
    :param int truncation: Longest word weighed
    :param float tol: Largest allowed pairwise projective distance
    :param int threads: Worker processes, traces run in this process when 1
    :return: Report
    :rtype: BasinReport
    """
    if not seeds:
        raise ValueError("Basin check needs at least one seed")
    jobs = [(automorphism, seed, steps, truncation, max_length) for seed in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(_final_weights, jobs))
    else:
        results = [_final_weights(job) for job in jobs]
    if any(truncated for _, truncated in results):
        logging.warning("Some traces hit the word budget before the requested step count")
    finals = tuple(weights for weights, _ in results)

    count = len(finals)
    distances = [[0.0] * count for _ in range(count)]
    for i, j in combinations(range(count), 2):
        distances[i][j] = distances[j][i] = projective_distance(finals[i], finals[j])
    worst = max((max(row) for row in distances), default=0.0)
    medoid = min(range(count), key=lambda i: sum(distances[i]))
    outliers = tuple(i for i in range(count) if distances[medoid][i] >= tol)
    spread = tuple(max(row) for row in distances)
    return BasinReport(worst < tol, worst, outliers, spread, finals)


@dataclass(frozen=True)
class TreeConvergenceReport:
    distances: tuple[float, ...]
    final_vector: tuple[float, ...]
    passed: bool
    first_increase: Optional[int] = None

    @property
    def final_distance(self) -> float:
        return self.distances[-1]


def tree_convergence_check(
    automorphism: Automorphism,
    base: TreePoint,
    steps: int,
    probe: Sequence[Word],
    tol: float,
    burn_in: Optional[int] = None,
) -> TreeConvergenceReport:
    """Successive distances of the normalised length vectors of T0.phi^k on a probe set.

    With ``burn_in`` set, the distances past it must also be non-increasing.

    :param Automorphism automorphism: The automorphism
    :param TreePoint base: Start point T0
    :param int steps: Number of iterations, at least 2
    :param probe: Probe words
    :param float tol: Final distance that counts as converged
    :param int burn_in: Leading distances exempt from the trend check
    :return: Report
    :rtype: TreeConvergenceReport
    """
    if steps < 2:
        raise ValueError(f"At least 2 steps needed, got {steps}")
    images = [cyclic_core(word) for word in probe]
    previous = [float(base.translation_length(word)) for word in images]
    distances: list[float] = []
    current = previous
    for _ in range(steps):
        images = [cyclic_core(automorphism.apply(word)) for word in images]
        current = [float(base.translation_length(word)) for word in images]
        distances.append(projective_gap(previous, current))
        previous = current
    total = sum(current)
    final_vector = tuple(x / total for x in current)
    rise = None if burn_in is None else first_increase(distances, burn_in, TREND_SLACK)
    if rise is not None:
        logging.warning(f"Tree distance rises at step {rise + 1}: {distances[rise]:.6g}")
    passed = distances[-1] < tol and rise is None
    return TreeConvergenceReport(tuple(distances), final_vector, passed, rise)


@dataclass(frozen=True)
class EscapeReport:
    heights: tuple[float, ...]
    bound: float
    escaped_at: Optional[int]

    @property
    def passed(self) -> bool:
        return self.escaped_at is not None


def escape_check(
    context: HeightContext,
    automorphism: Automorphism,
    seed: RationalCurrent,
    steps: int,
    bound: float,
    max_length: int = DEFAULT_WORD_BUDGET,
) -> EscapeReport:
    """Heights of phi^k mu for k = 0..steps and the first k whose height exceeds ``bound``.

    :param HeightContext context: Approximate trees
    :param Automorphism automorphism: The automorphism
    :param RationalCurrent seed: Nonzero start
    :param int steps: Number of iterations
    :param float bound: Height to exceed
    :return: Report
    :rtype: EscapeReport
    """
    heights = [height(context, seed)]
    current = seed
    for _ in range(steps):
        current = push_forward(automorphism, current)
        if current.max_class_length() > max_length:
            logging.warning(f"Escape check stopped at the word budget after {len(heights)} steps")
            break
        heights.append(height(context, current))
    escaped_at = next((k for k, value in enumerate(heights) if value > bound), None)
    return EscapeReport(tuple(heights), bound, escaped_at)
