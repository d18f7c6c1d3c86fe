import pytest

from outflare.config_manager import (
    ConfigError,
    get_default_sample_fraction,
    get_default_tol,
    get_default_truncation,
    load_config,
    parse_config,
)
from outflare.library import get_automorphism

INLINE = """\
# inline definition
[experiment]
kind=eigencurrent
rank=2
phi=fib

[automorphisms]
fib=ab;a
fib-inverse=b;Ba

[parameters]
truncation=2
"""


def test_inline_automorphism() -> None:
    config = parse_config(INLINE, "inline.conf")
    assert config.kind == "eigencurrent"
    assert config.rank == 2
    phi = config.get_phi()
    assert phi.name == "fib"
    assert phi == get_automorphism("fibonacci")
    assert config.parameters.truncation == 2
    assert config.parameters.tol == get_default_tol() == 1e-6
    assert config.output is None


def test_wrong_inverse_points_at_the_inverse_line() -> None:
    text = INLINE.replace("fib-inverse=b;Ba", "fib-inverse=b;aB")
    with pytest.raises(ConfigError) as info:
        parse_config(text, "broken.conf")
    assert "generator 1" in str(info.value)
    assert info.value.line == 9
    assert str(info.value).startswith("broken.conf:9:")


def test_syntax_error_reports_its_line() -> None:
    text = INLINE.replace("rank=2\n", "rank=2\nthis line is junk\n")
    with pytest.raises(ConfigError) as info:
        parse_config(text, "junk.conf")
    assert info.value.line == 5


def test_missing_inverse_entry() -> None:
    text = INLINE.replace("fib-inverse=b;Ba\n", "")
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert "fib-inverse" in str(info.value)


def test_rank_is_inferred_from_bundled_names() -> None:
    config = parse_config("[experiment]\nkind=pf\nphi=plastic\npsi=plastic-conjugate\n")
    assert config.rank == 3
    assert config.get_psi() == get_automorphism("plastic-conjugate")
    assert config.parameters.truncation == get_default_truncation()
    assert config.parameters.sample_fraction == get_default_sample_fraction()


def test_rank_mismatches() -> None:
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nkind=pf\nphi=plastic\npsi=fibonacci\n")
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nkind=pf\nrank=2\nphi=plastic\n")
    with pytest.raises(ConfigError):
        parse_config("[experiment]\nkind=pf\nrank=1\n")


def test_unknown_automorphism() -> None:
    with pytest.raises(ConfigError) as info:
        parse_config("[experiment]\nkind=pf\nrank=2\nphi=nonesuch\n")
    assert "nonesuch" in str(info.value)
    config = parse_config("[experiment]\nkind=pf\nrank=2\n")
    with pytest.raises(ConfigError):
        config.get_phi()


@pytest.mark.parametrize(
    "parameters",
    [
        "n=zero",
        "n=0",
        "tol=-1",
        "delta=-0.5",
        "sample-fraction=2",
        "hyperbolicity-stretch=1",
        "burn-in=-1",
    ],
)
def test_invalid_parameters(parameters: str) -> None:
    text = f"[experiment]\nkind=flare-cert\nphi=plastic\n\n[parameters]\n{parameters}\n"
    with pytest.raises(ConfigError) as info:
        parse_config(text, "params.conf")
    assert info.value.line == 6


def test_parameter_lists() -> None:
    text = "[experiment]\nphi=plastic\n\n[parameters]\nseeds=a; b ;aB\ndelta=0\nradius=0\n"
    parameters = parse_config(text).parameters
    assert parameters.seeds == ("a", "b", "aB")
    assert parameters.delta == 0
    assert parameters.radius == 0
    assert parameters.burn_in is None
    assert parse_config(f"{text}burn-in=0\n").parameters.burn_in == 0


def test_missing_file(tmp_path) -> None:
    with pytest.raises(ConfigError) as info:
        load_config(str(tmp_path / "absent.conf"))
    assert "absent.conf" in str(info.value)


def test_bundled_files_load(experiments_dir) -> None:
    paths = sorted(experiments_dir.glob("*.conf"))
    assert paths
    for path in paths:
        config = load_config(str(path))
        assert config.kind
        assert config.output


def test_certificate_path() -> None:
    config = parse_config("[experiment]\nphi=plastic\noutput=out/flare.csv\n")
    assert config.get_certificate_path() == "out/flare.cert"
    text = "[experiment]\nphi=plastic\n\n[parameters]\ncertificate=mine.cert\n"
    assert parse_config(text).get_certificate_path() == "mine.cert"
