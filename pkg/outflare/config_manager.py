from gi.repository import GLib

import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, TypeVar

from outflare import library
from outflare.automorphisms import Automorphism, AutomorphismError, from_literals
from outflare.words import RankMismatchError

EXPERIMENT_GROUP = "experiment"
AUTOMORPHISMS_GROUP = "automorphisms"
PARAMETERS_GROUP = "parameters"

INVERSE_SUFFIX = "-inverse"

KIND = "kind"
RANK = "rank"
PHI = "phi"
PSI = "psi"
OUTPUT = "output"

N = "n"
M = "m"
RADIUS = "radius"
POWERS = "powers"
TRUNCATION = "truncation"
DEPTH = "depth"
TOL = "tol"
MAX_ITERATIONS = "max-iterations"
STEPS = "steps"
SEEDS = "seeds"
MIDDLE = "middle"
DELTA = "delta"
ZERO_THRESHOLD = "zero-threshold"
BOUNDARY_TOLERANCE = "boundary-tolerance"
BURN_IN = "burn-in"
PROBE_LENGTH = "probe-length"
CERTIFICATE = "certificate"
SAMPLE_FRACTION = "sample-fraction"
HYPERBOLICITY_POWER = "hyperbolicity-power"
HYPERBOLICITY_STRETCH = "hyperbolicity-stretch"

T = TypeVar("T")


class ConfigError(ValueError):
    """An experiment file could not be loaded."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None) -> None:
        location = path
        if line is not None:
            location = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class ExperimentParameters:
    n: int = 1
    m: int = 1
    radius: int = 4
    powers: int = 4
    truncation: int = 3
    depth: int = 8
    tol: float = 1e-6
    max_iterations: int = 200
    steps: int = 1
    seeds: tuple[str, ...] = ()
    middle: str = ""
    delta: Optional[float] = None
    zero_threshold: float = 1e-9
    boundary_tolerance: float = 1e-6
    # Leading residuals exempt from trend checks, no trend check when unset
    burn_in: Optional[int] = None
    probe_length: int = 4
    certificate: Optional[str] = None
    sample_fraction: float = 0.01
    hyperbolicity_power: int = 4
    hyperbolicity_stretch: float = 2.0


DEFAULTS = ExperimentParameters()


def get_default_tol() -> float:
    """Get default convergence tolerance.

    :return: Tolerance
    :rtype: float
    """
    return DEFAULTS.tol


def get_default_truncation() -> int:
    """Get default truncation length for weight systems.

    :return: Longest word weighed
    :rtype: int
    """
    return DEFAULTS.truncation


def get_default_sample_fraction() -> float:
    return DEFAULTS.sample_fraction


@dataclass(frozen=True)
class ExperimentConfig:
    path: str
    kind: str
    rank: int
    automorphisms: dict[str, Automorphism]
    phi: Optional[str] = None
    psi: Optional[str] = None
    output: Optional[str] = None
    parameters: ExperimentParameters = field(default_factory=ExperimentParameters)

    def automorphism(self, name: Optional[str]) -> Automorphism:
        """Resolve a name defined in the file or bundled.

        :param str name: Automorphism name
        :return: Verified automorphism
        :rtype: Automorphism
        """
        if not name:
            raise ConfigError("No automorphism named in the experiment", self.path)
        if name in self.automorphisms:
            return self.automorphisms[name]
        if library.is_bundled(name):
            return library.get_automorphism(name)
        raise ConfigError(f"Unknown automorphism '{name}'", self.path)

    def get_phi(self) -> Automorphism:
        return self.automorphism(self.phi)

    def get_psi(self) -> Automorphism:
        return self.automorphism(self.psi)

    def get_certificate_path(self) -> str:
        """Certificate file path, next to the output when not given."""
        if self.parameters.certificate:
            return self.parameters.certificate
        stem = os.path.splitext(self.output or "flare")[0]
        return f"{stem}.cert"


def _locate(lines: list[str], group: str, key: Optional[str] = None) -> Optional[int]:
    current = None
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            if key is None and current == group:
                return number
            continue
        if current == group and key is not None and "=" in stripped:
            if stripped.split("=", 1)[0].strip() == key:
                return number
    return None


def _first_malformed_line(lines: list[str]) -> Optional[int]:
    in_group = False
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                return number
            in_group = True
        elif "=" not in stripped or not in_group:
            return number
    return None


class _Reader:
    def __init__(self, path: str, text: str) -> None:
        self.path = path
        self.lines = text.splitlines()
        self.keyfile = GLib.KeyFile()
        try:
            self.keyfile.load_from_data(text, len(text.encode("utf-8")), GLib.KeyFileFlags.NONE)
        except GLib.Error as e:
            raise ConfigError(e.message, path, _first_malformed_line(self.lines)) from e

    def has(self, group: str, key: str) -> bool:
        return key in self.keys(group)

    def keys(self, group: str) -> list[str]:
        if not self.keyfile.has_group(group):
            return []
        keys, _length = self.keyfile.get_keys(group)
        return list(keys)

    def error(self, message: str, group: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, self.path, _locate(self.lines, group, key))

    def get(self, group: str, key: str, getter: Callable[[str, str], T], default: T) -> T:
        if not self.has(group, key):
            return default
        try:
            return getter(group, key)
        except GLib.Error as e:
            raise self.error(f"Invalid value for '{key}': {e.message}", group, key) from e

    def get_string(self, group: str, key: str, default: Optional[str] = None) -> Optional[str]:
        value = self.get(group, key, self.keyfile.get_string, default)
        return value.strip() if value is not None else None

    def get_list(self, group: str, key: str) -> list[str]:
        values = self.get(group, key, self.keyfile.get_string_list, [])
        return [value.strip() for value in values]


def _read_parameters(reader: _Reader) -> ExperimentParameters:
    group = PARAMETERS_GROUP
    kf = reader.keyfile

    def integer(key: str, default: int, minimum: int = 1) -> int:
        value = reader.get(group, key, kf.get_integer, default)
        if value < minimum:
            raise reader.error(f"'{key}' must be at least {minimum}, got {value}", group, key)
        return value

    def real(key: str, default: float, positive: bool = True) -> float:
        value = reader.get(group, key, kf.get_double, default)
        if positive and value <= 0:
            raise reader.error(f"'{key}' must be positive, got {value}", group, key)
        return value

    burn_in = reader.get(group, BURN_IN, kf.get_integer, None)
    if burn_in is not None and burn_in < 0:
        raise reader.error(f"'{BURN_IN}' must be nonnegative, got {burn_in}", group, BURN_IN)
    delta = reader.get(group, DELTA, kf.get_double, None)
    if delta is not None and delta < 0:
        raise reader.error(f"'{DELTA}' must be nonnegative, got {delta}", group, DELTA)
    fraction = real(SAMPLE_FRACTION, DEFAULTS.sample_fraction)
    if fraction > 1:
        raise reader.error(f"'{SAMPLE_FRACTION}' must be at most 1", group, SAMPLE_FRACTION)
    stretch = real(HYPERBOLICITY_STRETCH, DEFAULTS.hyperbolicity_stretch)
    if stretch <= 1:
        raise reader.error("'hyperbolicity-stretch' must exceed 1", group, HYPERBOLICITY_STRETCH)

    return ExperimentParameters(
        n=integer(N, DEFAULTS.n),
        m=integer(M, DEFAULTS.m),
        radius=integer(RADIUS, DEFAULTS.radius, minimum=0),
        powers=integer(POWERS, DEFAULTS.powers),
        truncation=integer(TRUNCATION, DEFAULTS.truncation),
        depth=integer(DEPTH, DEFAULTS.depth),
        tol=real(TOL, DEFAULTS.tol),
        max_iterations=integer(MAX_ITERATIONS, DEFAULTS.max_iterations),
        steps=integer(STEPS, DEFAULTS.steps),
        seeds=tuple(reader.get_list(group, SEEDS)),
        middle=reader.get_string(group, MIDDLE, "") or "",
        delta=delta,
        zero_threshold=real(ZERO_THRESHOLD, DEFAULTS.zero_threshold),
        boundary_tolerance=real(BOUNDARY_TOLERANCE, DEFAULTS.boundary_tolerance),
        burn_in=burn_in,
        probe_length=integer(PROBE_LENGTH, DEFAULTS.probe_length),
        certificate=reader.get_string(group, CERTIFICATE),
        sample_fraction=fraction,
        hyperbolicity_power=integer(HYPERBOLICITY_POWER, DEFAULTS.hyperbolicity_power),
        hyperbolicity_stretch=stretch,
    )


def _read_automorphisms(reader: _Reader, rank: Optional[int]) -> dict[str, Automorphism]:
    group = AUTOMORPHISMS_GROUP
    keys = reader.keys(group)
    automorphisms: dict[str, Automorphism] = {}
    for name in keys:
        if name.endswith(INVERSE_SUFFIX):
            if name[: -len(INVERSE_SUFFIX)] not in keys:
                raise reader.error(f"Inverse images without images: '{name}'", group, name)
            continue
        inverse_key = f"{name}{INVERSE_SUFFIX}"
        if inverse_key not in keys:
            raise reader.error(f"Automorphism '{name}' has no '{inverse_key}' entry", group, name)
        images = reader.get_list(group, name)
        inverse_images = reader.get_list(group, inverse_key)
        if rank is not None and len(images) != rank:
            raise reader.error(
                f"Automorphism '{name}' has {len(images)} images, rank is {rank}", group, name
            )
        try:
            automorphisms[name] = from_literals(images, inverse_images, name=name)
        except AutomorphismError as e:
            raise reader.error(str(e), group, inverse_key) from e
        except (RankMismatchError, ValueError) as e:
            raise reader.error(f"Automorphism '{name}': {e}", group, name) from e
        logging.debug(f"Loaded automorphism {automorphisms[name]}")
    return automorphisms


def load_config(path: str) -> ExperimentConfig:
    """Load and verify an experiment file.

    :param str path: File path
    :return: Configuration with defaults filled in
    :rtype: ExperimentConfig
    """
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"Failed to read: {e.strerror}", path) from e
    return parse_config(text, path)


def parse_config(text: str, path: str = "") -> ExperimentConfig:
    """Parse experiment file contents; see :func:`load_config`."""
    reader = _Reader(path, text)
    group = EXPERIMENT_GROUP
    rank = reader.get(group, RANK, reader.keyfile.get_integer, None)
    if rank is not None and rank < 2:
        raise reader.error(f"Rank must be at least 2, got {rank}", group, RANK)
    automorphisms = _read_automorphisms(reader, rank)
    phi = reader.get_string(group, PHI)
    psi = reader.get_string(group, PSI)

    named: list[tuple[str, Automorphism]] = []
    for key, name in ((PHI, phi), (PSI, psi)):
        if not name:
            continue
        if name in automorphisms:
            named.append((key, automorphisms[name]))
        elif library.is_bundled(name):
            named.append((key, library.get_automorphism(name)))
        else:
            raise reader.error(f"Unknown automorphism '{name}'", group, key)
    if rank is None:
        ranks = {a.rank for a in automorphisms.values()} | {a.rank for _, a in named}
        if len(ranks) != 1:
            raise reader.error("Cannot infer the rank, set it explicitly", group)
        rank = ranks.pop()
    for name, automorphism in automorphisms.items():
        if automorphism.rank != rank:
            raise reader.error(
                f"'{name}' has rank {automorphism.rank}, experiment rank is {rank}",
                AUTOMORPHISMS_GROUP,
                name,
            )
    for key, automorphism in named:
        if automorphism.rank != rank:
            raise reader.error(
                f"'{automorphism.name}' has rank {automorphism.rank}, experiment rank is {rank}",
                group,
                key,
            )

    config = ExperimentConfig(
        path=path,
        kind=reader.get_string(group, KIND, "") or "",
        rank=rank,
        automorphisms=automorphisms,
        phi=phi,
        psi=psi,
        output=reader.get_string(group, OUTPUT),
        parameters=_read_parameters(reader),
    )
    logging.debug(f"Loaded {path or 'configuration'}: kind '{config.kind}', rank {rank}")
    return config
