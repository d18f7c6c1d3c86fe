from gi.repository import GLib

import logging
import math
import random
from dataclasses import dataclass

from outflare.automorphisms import Automorphism
from outflare.report_writer import write_text
from outflare.schottky import PASS_COUNT, FlareCertificate, flare_count, flare_powers
from outflare.words import CyclicWord, cyclic_canonical, cyclic_words, format_word, parse_word

CERTIFICATE_GROUP = "certificate"
HISTOGRAM_GROUP = "histogram"

PHI = "phi"
PSI = "psi"
N = "n"
M = "m"
RANK = "rank"
RADIUS = "radius"
WORDS_CHECKED = "words-checked"
WORST_WORD = "worst-word"
WORST_COUNT = "worst-count"
PASSED = "passed"


class CertificateError(ValueError):
    """A certificate file is missing, malformed or inconsistent."""


def format_certificate(certificate: FlareCertificate) -> str:
    """Render a certificate as key file text; the histogram maps length to checked;worst.

    :param FlareCertificate certificate: Certificate
    :return: Text
    :rtype: str
    """
    keyfile = GLib.KeyFile()
    keyfile.set_string(CERTIFICATE_GROUP, PHI, certificate.phi)
    keyfile.set_string(CERTIFICATE_GROUP, PSI, certificate.psi)
    keyfile.set_integer(CERTIFICATE_GROUP, N, certificate.n)
    keyfile.set_integer(CERTIFICATE_GROUP, M, certificate.m)
    keyfile.set_integer(CERTIFICATE_GROUP, RANK, certificate.rank)
    keyfile.set_integer(CERTIFICATE_GROUP, RADIUS, certificate.radius)
    keyfile.set_integer(CERTIFICATE_GROUP, WORDS_CHECKED, certificate.words_checked)
    worst_word = format_word(certificate.worst_word.as_word(), certificate.rank)
    keyfile.set_string(CERTIFICATE_GROUP, WORST_WORD, worst_word)
    keyfile.set_integer(CERTIFICATE_GROUP, WORST_COUNT, certificate.worst_count)
    keyfile.set_boolean(CERTIFICATE_GROUP, PASSED, certificate.passed)
    for length, (checked, worst) in enumerate(
        zip(certificate.length_checked, certificate.length_worst), start=1
    ):
        keyfile.set_integer_list(HISTOGRAM_GROUP, str(length), [checked, worst])
    data, _length = keyfile.to_data()
    return data


def write_certificate(path: str, certificate: FlareCertificate) -> None:
    write_text(path, format_certificate(certificate))


def parse_certificate(text: str) -> FlareCertificate:
    """Parse certificate text written by :func:`format_certificate`.

    :param str text: Key file text
    :return: Certificate
    :rtype: FlareCertificate
    """
    keyfile = GLib.KeyFile()
    try:
        keyfile.load_from_data(text, len(text.encode("utf-8")), GLib.KeyFileFlags.NONE)
        group = CERTIFICATE_GROUP
        rank = keyfile.get_integer(group, RANK)
        radius = keyfile.get_integer(group, RADIUS)
        worst_word = parse_word(keyfile.get_string(group, WORST_WORD), rank)
        length_checked: list[int] = []
        length_worst: list[int] = []
        for length in range(1, radius + 1):
            checked, worst = keyfile.get_integer_list(HISTOGRAM_GROUP, str(length))
            length_checked.append(checked)
            length_worst.append(worst)
        return FlareCertificate(
            phi=keyfile.get_string(group, PHI),
            psi=keyfile.get_string(group, PSI),
            n=keyfile.get_integer(group, N),
            m=keyfile.get_integer(group, M),
            rank=rank,
            radius=radius,
            words_checked=keyfile.get_integer(group, WORDS_CHECKED),
            worst_word=cyclic_canonical(worst_word)[0],
            worst_count=keyfile.get_integer(group, WORST_COUNT),
            passed=keyfile.get_boolean(group, PASSED),
            length_checked=tuple(length_checked),
            length_worst=tuple(length_worst),
        )
    except GLib.Error as e:
        raise CertificateError(f"Malformed certificate: {e.message}") from e
    except ValueError as e:
        raise CertificateError(f"Malformed certificate: {e}") from e


def read_certificate(path: str) -> FlareCertificate:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise CertificateError(f"Failed to read certificate {path}: {e.strerror}") from e
    return parse_certificate(text)


@dataclass(frozen=True)
class CertificateCheck:
    sampled: tuple[CyclicWord, ...]
    counts: tuple[int, ...]
    mismatches: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def verify_certificate(
    certificate: FlareCertificate,
    phi: Automorphism,
    psi: Automorphism,
    fraction: float = 0.01,
    seed: int = 0,
) -> CertificateCheck:
    """Replay a certificate: recount the ball, recheck the worst word and a random sample.

    :param FlareCertificate certificate: Recorded certificate
    :param Automorphism phi: First automorphism
    :param Automorphism psi: Second automorphism
    :param float fraction: Share of the ball rechecked besides the worst word
    :param int seed: Sampling seed
    :return: Rechecked words, their counts and every disagreement found
    :rtype: CertificateCheck
    """
    if phi.rank != certificate.rank or psi.rank != certificate.rank:
        raise CertificateError(f"Certificate is for rank {certificate.rank}")
    for recorded, automorphism in ((certificate.phi, phi), (certificate.psi, psi)):
        if recorded and automorphism.name and recorded != automorphism.name:
            logging.warning(f"Certificate names {recorded}, checking against {automorphism.name}")

    mismatches: list[str] = []
    ball = list(cyclic_words(certificate.rank, certificate.radius))
    if len(ball) != certificate.words_checked:
        mismatches.append(
            f"ball has {len(ball)} classes, certificate says {certificate.words_checked}"
        )
    for length, recorded in enumerate(certificate.length_checked, start=1):
        actual = sum(1 for c in ball if len(c) == length)
        if actual != recorded:
            mismatches.append(f"length {length} has {actual} classes, certificate says {recorded}")
    if certificate.passed != (certificate.worst_count >= PASS_COUNT):
        mismatches.append("pass flag disagrees with the worst count")

    powers = flare_powers(phi, psi, certificate.n, certificate.m)
    sample_size = max(1, math.ceil(fraction * len(ball))) if ball else 0
    sampled = [certificate.worst_word]
    sampled.extend(random.Random(seed).sample(ball, min(sample_size, len(ball))))
    counts = [flare_count(powers, cyclic.as_word()) for cyclic in sampled]
    if counts[0] != certificate.worst_count:
        mismatches.append(
            f"worst word {certificate.worst_word} counts {counts[0]}, "
            f"certificate says {certificate.worst_count}"
        )
    for cyclic, count in zip(sampled[1:], counts[1:]):
        if count < certificate.worst_count:
            mismatches.append(f"{cyclic} counts {count}, below the recorded worst")
    logging.debug(f"Rechecked {len(sampled)} classes, {len(mismatches)} mismatches")
    return CertificateCheck(tuple(sampled), tuple(counts), tuple(mismatches))
