"""End-to-end tests of the pipeline graph and the CLI exit codes."""
import json

import pytest

from nlhelm.config import parse_config
from nlhelm.main import main
from nlhelm.numerics.nlhf import read_field
from nlhelm.orchestrator import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_OK,
    EXIT_POSITIVITY,
    MODE_CONSTANTS,
    run,
)
from nlhelm.outputs import read_summary

SMALL = """\
[grid]
N = 2
M = 32
L = 4

[problem]
p = 4
lambdas = {lambdas}

[weight]
kind = two_balls
plus_center = -1, 0
plus_radius = {plus_radius}
minus_center = 1, 0
minus_radius = 0.3

[mp]
nodes = 9
max_iters = 100
restarts = 0
seeds = 2
"""

WIDE = """\
[grid]
N = 2
M = 64
L = 16
[problem]
p = 4
lambdas = 5
[weight]
preset = wide_defocusing_2d
[mp]
seeds = 2
"""


def _config(tmp_path, lambdas="8", plus_radius=0.8):
    config = parse_config(SMALL.format(lambdas=lambdas, plus_radius=plus_radius))
    return config.with_overrides(output_dir=tmp_path)


def _audit_nodes(directory):
    audit = json.loads((directory / "audit.json").read_text(encoding="utf-8"))
    return [entry["node"] for entry in audit]


def test_solve_writes_all_outputs(tmp_path):
    summary = run(_config(tmp_path))
    assert summary.exit_code in (EXIT_OK, EXIT_NO_CONVERGENCE)
    assert summary.exit_code == (EXIT_OK if summary.converged_count else EXIT_NO_CONVERGENCE)
    assert _audit_nodes(tmp_path) == [
        "realize", "geometry", "operators", "positivity", "constants", "sweep", "reconstruct", "emit",
    ]
    rows = read_summary(tmp_path / "summary.csv")
    assert len(rows) == 1 and float(rows[0]["lambda"]) == 8.0
    for name in ("alpha", "beta", "lambda0", "min_eigenvalue", "y_zero", "resolvent_norm_witness"):
        assert name in summary.constants
    u = read_field(tmp_path / "u_0.nlhf")
    assert u.grid.M == 32
    assert (tmp_path / "slice_0.csv").exists()


def test_constants_mode_skips_sweep(tmp_path):
    summary = run(_config(tmp_path), mode=MODE_CONSTANTS)
    assert summary.exit_code == EXIT_OK
    assert summary.rows == []
    assert summary.constants["alpha"] > 0
    assert "sweep" not in _audit_nodes(tmp_path)


def test_lambdas_below_threshold_are_skipped(tmp_path):
    summary = run(_config(tmp_path, lambdas="1e-12"))
    assert summary.exit_code == EXIT_NO_CONVERGENCE
    assert summary.skipped_lambdas == [1e-12]
    assert summary.rows == []
    assert any("lambda0" in err for err in summary.errors)


def test_weight_outside_support_is_a_config_failure(tmp_path):
    summary = run(_config(tmp_path, plus_radius=1.5))
    assert summary.exit_code == EXIT_CONFIG
    assert _audit_nodes(tmp_path) == ["realize", "emit"]
    assert summary.errors[0].startswith("Realize:")


def test_positivity_failure_aborts(tmp_path):
    config = parse_config(WIDE).with_overrides(output_dir=tmp_path)
    summary = run(config)
    assert summary.exit_code == EXIT_POSITIVITY
    assert summary.constants["positivity_passed"] is False
    assert "constants" not in _audit_nodes(tmp_path)


def test_cli_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text(SMALL.format(lambdas="8", plus_radius=0.8), encoding="utf-8")
    bad = tmp_path / "bad.cfg"
    bad.write_text("[grid]\nN = 2\n", encoding="utf-8")

    with pytest.raises(SystemExit) as info:
        main(["check", str(good)])
    assert info.value.code == EXIT_OK
    with pytest.raises(SystemExit) as info:
        main(["check", str(bad)])
    assert info.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["constants", str(bad), "--output", str(tmp_path / "out")])
    assert info.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["presets"])
    assert info.value.code == EXIT_OK
    assert "two_balls_2d" in capsys.readouterr().out


def test_check_reports_unreadable_weight_file(tmp_path, capsys):
    corrupt = tmp_path / "q.nlhf"
    corrupt.write_bytes(b"NLHF" + bytes(8))
    config = tmp_path / "from_file.cfg"
    config.write_text(
        "[grid]\nN = 2\nM = 32\nL = 4\n[problem]\np = 4\nlambdas = 8\n"
        f"[weight]\nkind = from_file\nfile = {corrupt}\n",
        encoding="utf-8",
    )
    with pytest.raises(SystemExit) as info:
        main(["check", str(config)])
    assert info.value.code == EXIT_CONFIG
    assert "[CONFIG]" in capsys.readouterr().out


def test_rerun_with_same_seed_is_byte_identical(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run(_config(first))
    run(_config(second))
    assert (first / "summary.csv").read_bytes() == (second / "summary.csv").read_bytes()
    assert (first / "u_0.nlhf").read_bytes() == (second / "u_0.nlhf").read_bytes()
