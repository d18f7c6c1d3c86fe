import csv

import pytest

from outflare.certificate import read_certificate
from outflare.config_manager import ConfigError, load_config, parse_config
from outflare.experiments import EXPERIMENTS, ExitStatus, RunOptions, run_experiment

EXPECTED = [
    ("validate", ExitStatus.PASS, ("automorphism", "rank", "images", "inverse-images")),
    ("plastic-orbit", ExitStatus.PASS, ("step", "word", "length")),
    ("plastic-pf", ExitStatus.PASS, ("automorphism", "lambda", "eigenvector")),
    ("plastic-train-track", ExitStatus.PASS, ("automorphism", "train-track", "illegal-turn")),
    ("fibonacci-eigencurrent", ExitStatus.PASS, ("step", "lambda", "distance")),
    ("plastic-basin", ExitStatus.PASS, ("seed", "spread", "outlier")),
    ("plastic-height-shift", ExitStatus.PASS, ("current-id", "depth", "height-before")),
    ("fibonacci-height-shift", ExitStatus.PASS, ("current-id", "depth", "height-before")),
    ("fibonacci-tree-ns", ExitStatus.PASS, ("step", "distance")),
    ("fibonacci-atoroidal", ExitStatus.FAIL, ("kind", "power", "word", "detail")),
    ("transposition-rank1", ExitStatus.FAIL, ("kind", "power", "word", "detail")),
    ("fibonacci-hyperbolic", ExitStatus.FAIL, ("power", "stretch", "words-checked")),
    ("fibonacci-stretch-sign", ExitStatus.PASS, ("m", "n", "middle", "lambda")),
    ("plastic-stretch-sign", ExitStatus.PASS, ("m", "n", "middle", "lambda")),
]


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.mark.parametrize("name,status,columns", EXPECTED)
def test_bundled_experiment(
    monkeypatch, tmp_path, experiments_dir, name: str, status: ExitStatus, columns: tuple
) -> None:
    monkeypatch.chdir(tmp_path)
    config = load_config(str(experiments_dir / f"{name}.conf"))
    outcome = run_experiment(config, options=RunOptions(output=f"{name}.csv"))
    assert outcome.status is status, outcome.message
    assert outcome.kind == config.kind
    rows = _read_rows(tmp_path / f"{name}.csv")
    assert tuple(rows[0][: len(columns)]) == columns
    assert len(rows) > 1


def test_atoroidal_witness_row(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    config = load_config(str(experiments_dir / "fibonacci-atoroidal.conf"))
    run_experiment(config)
    rows = _read_rows(tmp_path / "fibonacci-atoroidal.csv")
    assert rows[1][:3] == ["toroidal", "2", "abAB"]


def test_flare_certificate_then_verify(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    flare = load_config(str(experiments_dir / "plastic-flare.conf"))
    outcome = run_experiment(flare, options=RunOptions(threads=2))
    assert outcome.status is ExitStatus.PASS, outcome.message
    certificate = read_certificate(str(tmp_path / "plastic-flare.cert"))
    assert certificate.passed
    assert certificate.worst_count >= 3
    assert outcome.artifacts == ("plastic-flare.csv", "plastic-flare.cert")
    rows = _read_rows(tmp_path / "plastic-flare.csv")
    assert rows[0] == ["length", "words", "worst-count"]
    assert [row[0] for row in rows[1:]] == ["1", "2", "3", "4"]

    verify = load_config(str(experiments_dir / "plastic-verify.conf"))
    outcome = run_experiment(verify)
    assert outcome.status is ExitStatus.PASS, outcome.message


def test_verify_without_certificate(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    verify = load_config(str(experiments_dir / "plastic-verify.conf"))
    with pytest.raises(ValueError):
        run_experiment(verify)


def test_ping_pong_experiment(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    config = load_config(str(experiments_dir / "plastic-pingpong.conf"))
    outcome = run_experiment(config)
    assert outcome.status is ExitStatus.PASS, outcome.message
    rows = _read_rows(tmp_path / "plastic-pingpong.csv")
    assert rows == [["seed", "generator", "step", "region"]]


def test_height_shift_profile_rows(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    config = load_config(str(experiments_dir / "fibonacci-height-shift.conf"))
    run_experiment(config)
    rows = _read_rows(tmp_path / "fibonacci-height-shift.csv")
    assert len(rows) == 1 + 14 * 4
    assert [row[1] for row in rows[1::4]] == [str(depth) for depth in range(1, 15)]


def test_burn_in_rejects_oscillating_scale_factors(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    text = "[experiment]\nkind=eigencurrent\nphi=plastic\n\n[parameters]\ntruncation=2\n"
    assert run_experiment(parse_config(text)).status is ExitStatus.PASS
    checked = parse_config(f"{text}burn-in=0\n")
    assert run_experiment(checked).status is ExitStatus.FAIL


def test_kind_override(monkeypatch, tmp_path, experiments_dir) -> None:
    monkeypatch.chdir(tmp_path)
    config = load_config(str(experiments_dir / "plastic-pf.conf"))
    outcome = run_experiment(config, "train-track", RunOptions(output="tt.csv"))
    assert outcome.kind == "train-track"
    assert (tmp_path / "tt.csv").exists()


def test_output_defaults_to_the_kind(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    config = parse_config("[experiment]\nkind=orbit\nphi=fibonacci\n\n[parameters]\nsteps=3\n")
    outcome = run_experiment(config)
    assert outcome.artifacts == ("orbit.csv",)
    rows = _read_rows(tmp_path / "orbit.csv")
    assert [row[1] for row in rows[1:]] == ["a", "ab", "aab", "aabab"]


def test_reducible_pf_fails(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    config = parse_config("[experiment]\nkind=pf\nphi=identity-2\n")
    assert run_experiment(config).status is ExitStatus.FAIL
    rows = _read_rows(tmp_path / "pf.csv")
    assert rows[1][:2] == ["identity-2", ""]


def test_unknown_and_missing_kinds() -> None:
    config = parse_config("[experiment]\nphi=fibonacci\n")
    with pytest.raises(ConfigError):
        run_experiment(config)
    with pytest.raises(ConfigError):
        run_experiment(config, "nonesuch")
    assert "flare-cert" in EXPERIMENTS


def test_invalid_seed_word(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    text = "[experiment]\nkind=basin\nphi=fibonacci\n\n[parameters]\nseeds=a;c\n"
    with pytest.raises(ConfigError):
        run_experiment(parse_config(text))
