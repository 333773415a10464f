"""Tests for run-configuration parsing."""
from pathlib import Path

import pytest

from nlhelm.config import (
    default_output_dir,
    default_workers,
    exponent_window,
    load_config,
    parse_config,
)
from nlhelm.errors import ConfigError

BASE = """\
[grid]
N = 2
M = 32
L = 4

[problem]
p = 4
lambdas = 4, 2      # unordered on purpose

[weight]
kind = two_balls
plus_center = -1, 0
plus_radius = 0.8
minus_center = 1, 0
minus_radius = 0.3

[mp]
nodes = 9
max_iters = 100
seeds = 2
tol_inner = auto

[output]
dir = out
"""


def _with(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new)


def test_parse_base():
    config = parse_config(BASE)
    assert (config.N, config.M, config.L, config.p) == (2, 32, 4.0, 4.0)
    assert config.lambdas == (2.0, 4.0)
    assert config.weight.kind == "two_balls"
    assert config.weight.parameters["minus_center"] == (1.0, 0.0)
    assert config.mp.nodes == 9 and config.mp.max_iters == 100
    assert config.mp.tol_inner is None
    assert config.seeds == 2
    assert config.output_dir == Path("out")
    assert config.grid.h == 0.25
    assert config.to_dict()["mp"]["seeds"] == 2


def test_lambda_range_is_geometric():
    text = _with(BASE, "lambdas = 4, 2", "lambda_min = 1\nlambda_max = 100\nlambda_count = 3")
    assert parse_config(text).lambdas == pytest.approx((1.0, 10.0, 100.0))


def test_preset_with_override():
    text = BASE.split("[weight]")[0] + "[weight]\npreset = two_balls_2d\nminus_radius = 0.4\n"
    config = parse_config(text)
    assert config.weight.parameters["minus_radius"] == 0.4
    assert config.weight.parameters["plus_radius"] == 0.8


def test_fully_qualified_keys():
    config = parse_config(BASE + "problem.wavenumber = 2\n")
    assert config.wavenumber == 2.0


@pytest.mark.parametrize("old, new, line", [
    ("seeds = 2", "colour = red", 20),
    ("seeds = 2", "nodes = 11", 20),
    ("p = 4", "p = 2", 7),
    ("p = 4", "p = four", 7),
    ("[mp]", "[solver]", 17),
    ("seeds = 2", "seeds 2", 20),
    ("minus_radius = 0.3", "ring_inner = 0.3", 15),
    ("plus_center = -1, 0", "plus_center = -1, 0, 0", 12),
])
def test_errors_carry_line_numbers(old, new, line):
    with pytest.raises(ConfigError) as info:
        parse_config(_with(BASE, old, new))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("old, new", [
    ("lambdas = 4, 2", "lambdas = 4, 2\nlambda_min = 1"),
    ("lambdas = 4, 2", "lambdas = 4, -2"),
    ("lambdas = 4, 2      # unordered on purpose", ""),
    ("kind = two_balls", "kind = gaussian"),
    ("max_iters = 100", "descent = newton"),
    ("dir = out", "fields = maybe"),
    ("L = 4", "L = -4"),
])
def test_invalid_configs(old, new):
    with pytest.raises(ConfigError):
        parse_config(_with(BASE, old, new))


def test_strict_exponent_window():
    assert exponent_window(3) == (4.0, 6.0)
    with pytest.raises(ConfigError):
        parse_config(_with(BASE, "p = 4", "p = 4\nstrict = true"))
    text_3d = (
        "[grid]\nN = 3\nM = 16\nL = 8\n[problem]\np = {p}\nstrict = yes\nlambdas = 2\n"
        "[weight]\npreset = narrow_defocusing_3d\n"
    )
    assert parse_config(text_3d.format(p=5)).strict
    with pytest.raises(ConfigError):
        parse_config(text_3d.format(p=3))


def test_preset_dimension_must_match():
    text = BASE.split("[weight]")[0] + "[weight]\npreset = narrow_defocusing_3d\n"
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides_and_files(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE, encoding="utf-8")
    config = load_config(path).with_overrides(seed=7, output_dir=tmp_path / "o")
    assert config.seed == 7
    assert config.output_dir == tmp_path / "o"
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_environment_defaults(monkeypatch):
    monkeypatch.setenv("NLHELM_OUTPUT_DIR", "/tmp/nlhelm-out")
    monkeypatch.setenv("NLHELM_WORKERS", "many")
    assert default_output_dir() == Path("/tmp/nlhelm-out")
    assert default_workers() == 1
    monkeypatch.delenv("NLHELM_OUTPUT_DIR")
    monkeypatch.setenv("NLHELM_WORKERS", "3")
    assert default_output_dir() == Path("artifacts")
    assert default_workers() == 3
