import dataclasses
from fractions import Fraction

import pytest

from outflare.automorphisms import Automorphism, identity
from outflare.currents import (
    RationalCurrent,
    ZeroCurrentError,
    counting_current,
    counting_weights,
    projective_distance,
    push_forward,
)
from outflare.dynamics import (
    basin_check,
    eigencurrent_approx,
    escape_check,
    height_shift_check,
    height_shift_profile,
    iterate_current,
    tree_convergence_check,
)
from outflare.intersection import HeightContext
from outflare.metric_trees import TreePoint, first_increase, probe_words, unit_rose
from outflare.words import cyclic_words, parse_word, unoriented


def _eta(literal: str) -> RationalCurrent:
    return counting_current(parse_word(literal))


def _test_currents(rank: int, count: int) -> list[tuple[str, RationalCurrent]]:
    classes = []
    for cyclic in cyclic_words(rank, 3):
        key = unoriented(cyclic)
        if key not in classes:
            classes.append(key)
    return [(str(c), counting_current(c.as_word())) for c in classes[:count]]


def test_identity_iteration_is_stationary() -> None:
    trace = iterate_current(identity(2), _eta("ab"), 3, 2)
    assert [step.k for step in trace.steps] == [1, 2, 3]
    assert all(step.distance == 0 for step in trace.steps)
    assert all(step.scale_factor == 1 for step in trace.steps)
    assert not trace.truncated


def test_scale_factor_tends_to_stretch(fibonacci: Automorphism, golden_root: float) -> None:
    trace = iterate_current(fibonacci, _eta("a"), 16, 2)
    assert abs(trace.steps[-1].scale_factor - golden_root) < 1e-3
    assert trace.steps[-1].distance < trace.steps[0].distance


def test_iteration_stops_at_word_budget(fibonacci: Automorphism) -> None:
    trace = iterate_current(fibonacci, _eta("a"), 30, 2, max_length=100)
    assert trace.truncated
    assert len(trace.steps) < 30
    with pytest.raises(ZeroCurrentError):
        iterate_current(fibonacci, RationalCurrent(), 3, 2)
    with pytest.raises(ValueError):
        iterate_current(fibonacci, _eta("a"), 0, 2)


def test_eigencurrent_converges(
    fibonacci: Automorphism, plastic: Automorphism, golden_root: float, plastic_root: float
) -> None:
    golden = eigencurrent_approx(fibonacci, 2, 1e-6, 100)
    assert golden.converged
    assert golden.period is None
    assert abs(golden.lambda_estimate - golden_root) < 1e-4

    cubic = eigencurrent_approx(plastic, 2, 1e-6, 200)
    assert cubic.converged
    assert abs(cubic.lambda_estimate - plastic_root) < 1e-3


def test_eigencurrent_detects_periodic_traces(transposition: Automorphism) -> None:
    approx = eigencurrent_approx(transposition, 2, 1e-6, 50)
    assert not approx.converged
    assert approx.period == 2


def test_eigencurrent_is_independent_of_the_seed(fibonacci: Automorphism) -> None:
    first = eigencurrent_approx(fibonacci, 3, 1e-8, 100)
    second = eigencurrent_approx(fibonacci, 3, 1e-8, 100, seed=_eta("aB"))
    assert projective_distance(first.weights, second.weights) < 1e-6


def test_height_shift_residual_decays(plastic: Automorphism) -> None:
    currents = _test_currents(3, 10)
    assert len(currents) == 10
    shallow = height_shift_check(HeightContext.from_automorphism(plastic, 8), plastic, currents)
    deep = height_shift_check(HeightContext.from_automorphism(plastic, 12), plastic, currents)
    assert deep.max_residual <= shallow.max_residual
    assert shallow.max_residual < 0.1
    assert deep.max_residual < 0.1
    assert len(deep.rows) == 10


def test_height_shift_is_exact_for_identity(plastic: Automorphism) -> None:
    context = HeightContext.from_automorphism(plastic, 4)
    unshifted = dataclasses.replace(context, log_stretch_sum=0.0)
    report = height_shift_check(unshifted, identity(3), _test_currents(3, 4))
    assert report.max_residual == 0.0


def test_basin_of_the_rank_three_anchor(plastic: Automorphism, plastic_root: float) -> None:
    seeds = [_eta("a"), _eta("b"), _eta("c"), _eta("aB")]
    report = basin_check(plastic, seeds, 24, 2, 1e-3)
    assert report.passed, report.spread
    assert report.outliers == ()
    trace = iterate_current(plastic, _eta("a"), 24, 2)
    assert abs(trace.steps[-1].scale_factor - plastic_root) < 1e-3


def test_basin_flags_identity() -> None:
    report = basin_check(identity(2), [_eta("a"), _eta("b"), _eta("a")], 3, 2, 1e-3)
    assert not report.passed
    assert report.outliers == (1,)
    assert report.max_distance == pytest.approx(4.0)


def test_basin_worker_processes_agree(fibonacci: Automorphism) -> None:
    seeds = [_eta("a"), _eta("b"), _eta("ab")]
    serial = basin_check(fibonacci, seeds, 10, 2, 1e-2)
    parallel = basin_check(fibonacci, seeds, 10, 2, 1e-2, threads=2)
    assert serial.spread == parallel.spread
    with pytest.raises(ValueError):
        basin_check(fibonacci, [], 10, 2, 1e-2)


def test_tree_convergence(fibonacci: Automorphism) -> None:
    probe = probe_words(2, 3)
    unit = tree_convergence_check(fibonacci, unit_rose(2), 20, probe, 1e-3)
    skewed = TreePoint((Fraction(1), Fraction(3)), identity(2))
    other = tree_convergence_check(fibonacci, skewed, 20, probe, 1e-3)
    assert unit.passed
    assert other.passed
    gap = sum(abs(x - y) for x, y in zip(unit.final_vector, other.final_vector))
    assert gap < 1e-3


def test_tree_convergence_of_identity() -> None:
    report = tree_convergence_check(identity(2), unit_rose(2), 3, probe_words(2, 2), 1e-9)
    assert report.distances == (0.0, 0.0, 0.0)
    assert report.final_distance == 0.0
    with pytest.raises(ValueError):
        tree_convergence_check(identity(2), unit_rose(2), 1, probe_words(2, 2), 1e-9)


def test_escape_from_the_height_band(plastic: Automorphism) -> None:
    context = HeightContext.from_automorphism(plastic, 8)
    report = escape_check(context, plastic, _eta("a"), 20, context.log_stretch_sum)
    assert report.passed
    assert len(report.heights) == 21
    assert report.heights[-1] > report.heights[0]


def test_scale_factors_approach_the_stretch_monotonically(
    fibonacci: Automorphism, golden_root: float
) -> None:
    trace = iterate_current(fibonacci, _eta("a"), 16, 2)
    errors = [abs(step.scale_factor - golden_root) for step in trace.steps]
    assert first_increase(errors) is None
    approx = eigencurrent_approx(fibonacci, 3, 1e-6, 100)
    assert first_increase(approx.scale_errors(), burn_in=2, slack=1e-12) is None
    assert len(approx.scale_errors()) == approx.iterations - 1


@pytest.mark.parametrize("truncation", [2, 3])
def test_eigencurrent_is_nearly_fixed(fibonacci: Automorphism, truncation: int) -> None:
    tol = 1e-6
    approx = eigencurrent_approx(fibonacci, truncation, tol, 100)
    assert approx.converged
    image = push_forward(fibonacci, approx.current)
    pushed = counting_weights(image, truncation, fibonacci.rank).normalized()
    assert projective_distance(pushed, approx.weights) <= 2 * tol


def test_tree_distances_shrink_past_burn_in(fibonacci: Automorphism) -> None:
    probe = probe_words(2, 3)
    report = tree_convergence_check(fibonacci, unit_rose(2), 20, probe, 1e-3, burn_in=8)
    assert report.passed
    assert report.first_increase is None
    assert first_increase(report.distances, 8, 1e-12) is None
    flat = tree_convergence_check(identity(2), unit_rose(2), 4, probe, 1e-9, burn_in=0)
    assert flat.passed


def test_height_shift_profile(fibonacci: Automorphism) -> None:
    currents = [("a", _eta("a")), ("ab", _eta("ab"))]
    profile = height_shift_profile(fibonacci, currents, range(6, 15))
    assert profile.depths == tuple(range(6, 15))
    assert profile.first_increase(slack=1e-9) is None
    residuals = profile.max_residuals
    assert residuals[-1] < residuals[0]
    assert residuals[-1] < 1e-3
    with pytest.raises(ValueError):
        height_shift_profile(fibonacci, currents, [8, 6])
    with pytest.raises(ValueError):
        height_shift_profile(fibonacci, currents, [])
