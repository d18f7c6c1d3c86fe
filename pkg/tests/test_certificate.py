import dataclasses

import pytest

from outflare.automorphisms import Automorphism
from outflare.certificate import (
    CertificateError,
    format_certificate,
    parse_certificate,
    read_certificate,
    verify_certificate,
    write_certificate,
)
from outflare.schottky import FlareCertificate, flare_certify


@pytest.fixture
def certificate(plastic: Automorphism, plastic_conjugate: Automorphism) -> FlareCertificate:
    return flare_certify(plastic, plastic_conjugate, 1, 1, 4)


def test_text_round_trip(certificate: FlareCertificate) -> None:
    text = format_certificate(certificate)
    assert "[certificate]" in text
    assert "[histogram]" in text
    assert parse_certificate(text) == certificate


def test_file_round_trip(tmp_path, certificate: FlareCertificate) -> None:
    path = tmp_path / "nested" / "plastic.cert"
    write_certificate(str(path), certificate)
    assert read_certificate(str(path)) == certificate


def test_unreadable_and_malformed_certificates(tmp_path) -> None:
    with pytest.raises(CertificateError):
        read_certificate(str(tmp_path / "missing.cert"))
    with pytest.raises(CertificateError):
        parse_certificate("not a key file")
    with pytest.raises(CertificateError):
        parse_certificate("[certificate]\nrank=three\n")
    with pytest.raises(CertificateError):
        parse_certificate("[certificate]\nphi=plastic\n")


def test_verify_accepts_a_fresh_certificate(
    certificate: FlareCertificate, plastic: Automorphism, plastic_conjugate: Automorphism
) -> None:
    check = verify_certificate(certificate, plastic, plastic_conjugate, fraction=0.5, seed=3)
    assert check.passed, check.mismatches
    assert check.sampled[0] == certificate.worst_word
    assert check.counts[0] == certificate.worst_count
    assert all(count >= certificate.worst_count for count in check.counts)


def test_verify_catches_tampering(
    certificate: FlareCertificate, plastic: Automorphism, plastic_conjugate: Automorphism
) -> None:
    inflated = dataclasses.replace(certificate, worst_count=certificate.worst_count + 1)
    check = verify_certificate(inflated, plastic, plastic_conjugate)
    assert not check.passed
    assert any("worst word" in mismatch for mismatch in check.mismatches)

    recounted = dataclasses.replace(certificate, words_checked=certificate.words_checked + 1)
    check = verify_certificate(recounted, plastic, plastic_conjugate)
    assert any("ball has" in mismatch for mismatch in check.mismatches)

    flagged = dataclasses.replace(certificate, passed=not certificate.passed)
    check = verify_certificate(flagged, plastic, plastic_conjugate)
    assert "pass flag disagrees with the worst count" in check.mismatches


def test_verify_rejects_other_ranks(
    certificate: FlareCertificate, fibonacci: Automorphism
) -> None:
    with pytest.raises(CertificateError):
        verify_certificate(certificate, fibonacci, fibonacci)


def test_text_is_independent_of_thread_count(
    plastic: Automorphism, plastic_conjugate: Automorphism
) -> None:
    serial = flare_certify(plastic, plastic_conjugate, 2, 2, 5)
    parallel = flare_certify(plastic, plastic_conjugate, 2, 2, 5, threads=8)
    assert format_certificate(serial) == format_certificate(parallel)
