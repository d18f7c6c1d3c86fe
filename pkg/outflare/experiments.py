"""Experiment dispatch: run one kind of experiment from a loaded configuration."""

import logging
import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Optional, Sequence

from outflare.automorphisms import Automorphism, orbit
from outflare.certificate import read_certificate, verify_certificate, write_certificate
from outflare.config_manager import ConfigError, ExperimentConfig
from outflare.const import TREND_SLACK
from outflare.currents import RationalCurrent, counting_current
from outflare.dynamics import (
    basin_check,
    eigencurrent_approx,
    height_shift_profile,
    tree_convergence_check,
)
from outflare.metric_trees import first_increase, probe_words, unit_rose
from outflare.report_writer import write_csv
from outflare.schottky import (
    NoneFound,
    SearchResult,
    atoroidal_search,
    flare_certify,
    hyperbolicity_certify,
    ping_pong_containment,
    rank1_invariant_factor_search,
    stretch_sign_experiment,
)
from outflare.spectra import (
    PowerIterationError,
    ReducibleMatrixError,
    is_train_track_on_rose,
    pf_eigen,
    transition_matrix,
)
from outflare.words import Word, cyclic_words, format_word, parse_word, unoriented

HEIGHT_SHIFT_CURRENTS = 10
PING_PONG_SEEDS = 20
PF_COLUMNS = (
    "automorphism",
    "lambda",
    "eigenvector",
    "residual",
    "iterations",
    "irreducible",
    "primitive",
)


class ExitStatus(IntEnum):
    PASS = 0
    FAIL = 1
    USAGE = 2


@dataclass(frozen=True)
class RunOptions:
    output: Optional[str] = None
    threads: int = 1
    seed: int = 0


@dataclass
class _Table:
    header: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)
    passed: bool = True
    message: str = ""
    artifacts: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ExperimentOutcome:
    kind: str
    status: ExitStatus
    message: str
    artifacts: tuple[str, ...] = ()


def _word(config: ExperimentConfig, literal: str) -> Word:
    try:
        return parse_word(literal, config.rank)
    except ValueError as e:
        raise ConfigError(f"Invalid word '{literal}': {e}", config.path) from e


def _seeds(config: ExperimentConfig, default: Sequence[Word]) -> list[tuple[str, RationalCurrent]]:
    words = [_word(config, s) for s in config.parameters.seeds] or list(default)
    seeds = []
    for word in words:
        if word.is_identity():
            raise ConfigError("Seed words must be nontrivial", config.path)
        seeds.append((format_word(word, config.rank), counting_current(word)))
    return seeds


def _generators(rank: int) -> list[Word]:
    return [Word((g,)) for g in range(1, rank + 1)]


def _involved(config: ExperimentConfig) -> list[Automorphism]:
    automorphisms = [config.get_phi()]
    if config.psi:
        automorphisms.append(config.get_psi())
    return automorphisms


def _validate(config: ExperimentConfig, options: RunOptions) -> _Table:
    table = _Table(("automorphism", "rank", "images", "inverse-images"))
    named = dict(config.automorphisms)
    for name in (config.phi, config.psi):
        if name and name not in named:
            named[name] = config.automorphism(name)
    for name, automorphism in named.items():
        images = ";".join(format_word(w, automorphism.rank) for w in automorphism.images)
        inverses = ";".join(format_word(w, automorphism.rank) for w in automorphism.inverse_images)
        table.rows.append((name, automorphism.rank, images, inverses))
    table.message = f"{len(named)} automorphisms verified"
    return table


def _orbit(config: ExperimentConfig, options: RunOptions) -> _Table:
    table = _Table(("step", "word", "length"))
    start = _word(config, config.parameters.seeds[0]) if config.parameters.seeds else Word((1,))
    classes = orbit(config.get_phi(), start, config.parameters.steps)
    for step, cyclic in enumerate(classes):
        table.rows.append((step, format_word(cyclic.as_word(), config.rank), len(cyclic)))
    table.message = f"Orbit of {format_word(start)} over {config.parameters.steps} steps"
    return table


def _pf(config: ExperimentConfig, options: RunOptions) -> _Table:
    table = _Table(PF_COLUMNS)
    for automorphism in _involved(config):
        matrix = transition_matrix(automorphism)
        try:
            data = pf_eigen(matrix)
        except (ReducibleMatrixError, PowerIterationError) as e:
            logging.warning(f"{automorphism.name}: {e}")
            irreducible = matrix.is_irreducible()
            primitive = matrix.is_primitive()
            table.rows.append((automorphism.name, None, None, None, 0, irreducible, primitive))
            table.passed = False
            continue
        table.rows.append(
            (
                automorphism.name,
                data.eigenvalue,
                data.eigenvector,
                data.residual,
                data.iterations,
                data.irreducible,
                data.primitive,
            )
        )
        table.message = f"{automorphism.name}: lambda {data.eigenvalue:.12g}"
        burn_in = config.parameters.burn_in
        if burn_in is not None:
            rise = first_increase(data.bracket_history, burn_in, TREND_SLACK)
            if rise is not None:
                logging.warning(f"{automorphism.name}: eigenvalue bracket widens at {rise + 1}")
                table.passed = False
    return table


def _train_track(config: ExperimentConfig, options: RunOptions) -> _Table:
    table = _Table(("automorphism", "train-track", "illegal-turn"))
    for automorphism in _involved(config):
        report = is_train_track_on_rose(automorphism)
        turn = None
        if report.illegal_turn is not None:
            turn = " ".join(format_word(Word((x,)), config.rank) for x in report.illegal_turn)
        table.rows.append((automorphism.name, report.is_train_track, turn))
        table.passed = table.passed and report.is_train_track
    return table


def _eigencurrent(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    approx = eigencurrent_approx(
        config.get_phi(), parameters.truncation, parameters.tol, parameters.max_iterations
    )
    rise: Optional[int] = None
    if parameters.burn_in is not None:
        rise = first_increase(approx.scale_errors(), parameters.burn_in, TREND_SLACK)
    if rise is not None:
        logging.warning(f"Scale factor moves away from the stretch estimate at step {rise + 1}")
    table = _Table(("step", "lambda", "distance"), passed=approx.converged and rise is None)
    for step in approx.steps:
        table.rows.append((step.k, step.scale_factor, step.distance))
    state = "converged" if approx.converged else "did not converge"
    table.message = f"{state} after {approx.iterations} steps, lambda {approx.lambda_estimate:.12g}"
    return table


def _basin(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    seeds = _seeds(config, _generators(config.rank))
    report = basin_check(
        config.get_phi(),
        [current for _, current in seeds],
        parameters.steps,
        parameters.truncation,
        parameters.tol,
        threads=options.threads,
    )
    table = _Table(("seed", "spread", "outlier"), passed=report.passed)
    for index, (seed_id, _) in enumerate(seeds):
        table.rows.append((seed_id, report.spread[index], index in report.outliers))
    table.message = f"max pairwise distance {report.max_distance:.12g}"
    return table


def _height_test_words(rank: int) -> list[Word]:
    classes: list[Word] = []
    seen = set()
    for cyclic in cyclic_words(rank, 3):
        key = unoriented(cyclic)
        if key in seen:
            continue
        seen.add(key)
        classes.append(key.as_word())
        if len(classes) == HEIGHT_SHIFT_CURRENTS:
            break
    return classes


def _height_shift(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    phi = config.get_phi()
    currents = _seeds(config, _height_test_words(config.rank))
    # Without a burn-in only the configured depth is evaluated
    first = 1 if parameters.burn_in is not None else parameters.depth
    profile = height_shift_profile(
        phi,
        currents,
        range(first, parameters.depth + 1),
        zero_threshold=parameters.zero_threshold,
        boundary_tolerance=parameters.boundary_tolerance,
    )
    report = profile.reports[-1]
    passed = report.max_residual <= parameters.tol
    if parameters.burn_in is not None:
        # Rises below tol are within the error of the stretch estimates
        rise = profile.first_increase(parameters.burn_in, parameters.tol)
        if rise is not None:
            logging.warning(f"Shift residual rises at depth {profile.depths[rise]}")
            passed = False
    table = _Table(
        ("current-id", "depth", "height-before", "height-after", "shift-residual"),
        passed=passed,
    )
    for depth_report in profile.reports:
        for row in depth_report.rows:
            table.rows.append(
                (row.current_id, row.depth, row.height_before, row.height_after, row.shift_residual)
            )
    table.message = f"max residual {report.max_residual:.12g}, mean {report.mean_residual:.12g}"
    return table


def _tree_ns(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    report = tree_convergence_check(
        config.get_phi(),
        unit_rose(config.rank),
        parameters.steps,
        probe_words(config.rank, parameters.probe_length),
        parameters.tol,
        burn_in=parameters.burn_in,
    )
    table = _Table(("step", "distance"), passed=report.passed)
    for step, distance in enumerate(report.distances, start=1):
        table.rows.append((step, distance))
    table.message = f"final distance {report.final_distance:.12g}"
    return table


def _flare_cert(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    certificate = flare_certify(
        config.get_phi(),
        config.get_psi(),
        parameters.n,
        parameters.m,
        parameters.radius,
        threads=options.threads,
    )
    path = config.get_certificate_path()
    write_certificate(path, certificate)
    table = _Table(("length", "words", "worst-count"), passed=certificate.passed)
    for length, (checked, worst) in enumerate(
        zip(certificate.length_checked, certificate.length_worst), start=1
    ):
        table.rows.append((length, checked, worst))
    table.artifacts.append(path)
    table.message = (
        f"{certificate.words_checked} classes, worst count {certificate.worst_count} "
        f"on {format_word(certificate.worst_word.as_word(), config.rank)}"
    )
    return table


def _verify_cert(config: ExperimentConfig, options: RunOptions) -> _Table:
    certificate = read_certificate(config.get_certificate_path())
    check = verify_certificate(
        certificate,
        config.get_phi(),
        config.get_psi(),
        config.parameters.sample_fraction,
        options.seed,
    )
    table = _Table(("word", "count", "recorded-worst"), passed=check.passed)
    for cyclic, count in zip(check.sampled, check.counts):
        table.rows.append(
            (format_word(cyclic.as_word(), config.rank), count, certificate.worst_count)
        )
    for mismatch in check.mismatches:
        logging.warning(f"Certificate mismatch: {mismatch}")
    table.message = f"{len(check.sampled)} classes rechecked, {len(check.mismatches)} mismatches"
    return table


def _search_table(config: ExperimentConfig, result: SearchResult) -> _Table:
    table = _Table(("kind", "power", "word", "detail"))
    if isinstance(result, NoneFound):
        detail = f"radius {result.radius}, {result.words_searched} classes"
        table.rows.append(("none", result.max_power, "", detail))
        table.message = f"No witness up to power {result.max_power} and radius {result.radius}"
        return table
    word = format_word(result.word.as_word(), config.rank)
    table.rows.append((result.kind, result.power, word, result.detail))
    table.passed = False
    table.message = f"Witness {word} at power {result.power}"
    return table


def _atoroidal_search(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    return _search_table(
        config, atoroidal_search(config.get_phi(), parameters.powers, parameters.radius)
    )


def _rank1_search(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    return _search_table(
        config,
        rank1_invariant_factor_search(config.get_phi(), parameters.powers, parameters.radius),
    )


def _stretch_sign(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    try:
        middle = parse_word(parameters.middle, 2)
    except ValueError as e:
        raise ConfigError(f"Middle word must use a and b only: {e}", config.path) from e
    report = stretch_sign_experiment(
        config.get_phi(),
        config.get_psi(),
        parameters.m,
        parameters.n,
        middle,
        parameters.truncation,
        parameters.max_iterations,
        parameters.tol,
        parameters.depth,
    )
    table = _Table(
        ("m", "n", "middle", "lambda", "converged", "iterations", "side", "passed"),
        passed=report.passed,
    )
    table.rows.append(
        (
            parameters.m,
            parameters.n,
            parameters.middle,
            report.lambda_estimate,
            report.converged,
            report.iterations,
            report.side,
            report.passed,
        )
    )
    table.message = f"lambda {report.lambda_estimate:.12g}, attractor in {report.side.value}"
    return table


def _ping_pong_seeds(config: ExperimentConfig, seed: int) -> list[Word]:
    ball = list(cyclic_words(config.rank, config.parameters.probe_length))
    sample = random.Random(seed).sample(ball, min(PING_PONG_SEEDS, len(ball)))
    return [cyclic.as_word() for cyclic in sample]


def _pingpong(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    seeds = _seeds(config, _ping_pong_seeds(config, options.seed))
    report = ping_pong_containment(
        config.get_phi(),
        config.get_psi(),
        parameters.n,
        parameters.m,
        [current for _, current in seeds],
        parameters.truncation,
        steps=parameters.steps,
        delta=parameters.delta,
        tol=parameters.tol,
        max_iter=parameters.max_iterations,
    )
    table = _Table(("seed", "generator", "step", "region"), passed=report.passed)
    for violation in report.violations:
        seed_id = seeds[violation.seed][0]
        table.rows.append((seed_id, violation.generator, violation.step, violation.region))
    table.message = (
        f"{len(report.violations)} violations over {report.seeds_checked} seeds, "
        f"delta {report.delta:.6g}"
    )
    return table


def _hyperbolic_cert(config: ExperimentConfig, options: RunOptions) -> _Table:
    parameters = config.parameters
    report = hyperbolicity_certify(
        config.get_phi(),
        parameters.hyperbolicity_power,
        parameters.hyperbolicity_stretch,
        parameters.radius,
    )
    table = _Table(
        ("power", "stretch", "words-checked", "worst-word", "worst-ratio", "passed"),
        passed=report.passed,
    )
    worst = format_word(report.worst_word.as_word(), config.rank)
    table.rows.append(
        (
            report.power,
            report.stretch,
            report.words_checked,
            worst,
            report.worst_ratio,
            report.passed,
        )
    )
    table.message = f"worst ratio {report.worst_ratio:.12g} on {worst}"
    return table


EXPERIMENTS: dict[str, Callable[[ExperimentConfig, RunOptions], _Table]] = {
    "validate": _validate,
    "orbit": _orbit,
    "pf": _pf,
    "train-track": _train_track,
    "eigencurrent": _eigencurrent,
    "basin": _basin,
    "height-shift": _height_shift,
    "tree-ns": _tree_ns,
    "flare-cert": _flare_cert,
    "verify-cert": _verify_cert,
    "atoroidal-search": _atoroidal_search,
    "rank1-search": _rank1_search,
    "stretch-sign": _stretch_sign,
    "pingpong": _pingpong,
    "hyperbolic-cert": _hyperbolic_cert,
}


def run_experiment(
    config: ExperimentConfig, kind: Optional[str] = None, options: Optional[RunOptions] = None
) -> ExperimentOutcome:
    """Run an experiment and write its CSV.

    :param ExperimentConfig config: Loaded configuration
    :param str kind: Experiment kind, the configured one when absent
    :param RunOptions options: Output path override, worker count and sampling seed
    :return: Outcome with exit status 0 on pass and 1 on fail or witness found
    :rtype: ExperimentOutcome
    """
    options = options or RunOptions()
    kind = kind or config.kind
    if not kind:
        raise ConfigError("No experiment kind given", config.path)
    if kind not in EXPERIMENTS:
        raise ConfigError(f"Unknown experiment kind '{kind}'", config.path)

    logging.info(f"Running {kind}")
    table = EXPERIMENTS[kind](config, options)
    output = options.output or config.output or f"{kind}.csv"
    write_csv(output, table.header, table.rows)
    status = ExitStatus.PASS if table.passed else ExitStatus.FAIL
    return ExperimentOutcome(kind, status, table.message, tuple([output] + table.artifacts))
