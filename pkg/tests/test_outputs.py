"""Tests for the CSV tables and field files of a run."""
import csv
import json
import math

import numpy as np

from nlhelm.numerics.grid_field import Grid
from nlhelm.outputs import (
    DIAGNOSTICS_HEADER,
    SUMMARY_HEADER,
    RunSummary,
    SummaryRow,
    emit_outputs,
    read_summary,
    write_slice,
)


def _row(lam, converged=True):
    return SummaryRow(lam, converged, 0.5, 1.0, 0.1, 2.0, 1e-8, 1e-4, 12, 0, message="ok")


def test_tables_without_fields(tmp_path):
    summary = RunSummary(
        mode="solve",
        constants={"alpha": 0.25, "criterion_met": True, "N": 2},
        rows=[_row(2.0), _row(4.0, converged=False)],
    )
    written = emit_outputs(summary, [None, None], tmp_path)
    assert {p.name for p in written} == {"summary.csv", "constants.csv", "diagnostics.csv"}

    rows = read_summary(tmp_path / "summary.csv")
    assert list(rows[0]) == list(SUMMARY_HEADER)
    assert [r["converged"] for r in rows] == ["true", "false"]
    assert float(rows[0]["lambda"]) == 2.0 and rows[0]["iters"] == "12"

    with (tmp_path / "constants.csv").open() as handle:
        constants = list(csv.reader(handle))
    assert constants == [["name", "value"], ["alpha", "0.25"], ["criterion_met", "true"], ["N", "2"]]

    with (tmp_path / "diagnostics.csv").open() as handle:
        header = next(csv.reader(handle))
    assert header == list(DIAGNOSTICS_HEADER)


def test_nan_and_missing_values():
    row = SummaryRow(3.0, False, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan, 0, 2)
    cells = row.summary_cells()
    assert cells[2] == "nan"
    assert row.diagnostic_cells()[7] == ""


def test_slice_is_long_format(tmp_path):
    grid = Grid(3, 8, 2)
    x, y, z = grid.coordinates()
    u = grid.field(x + 10 * y + 100 * z)
    write_slice(tmp_path / "slice.csv", u)
    with (tmp_path / "slice.csv").open() as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == grid.M**2
    for row in rows[:10]:
        assert float(row["u"]) == float(row["x0"]) + 10 * float(row["x1"])


def test_summary_json():
    summary = RunSummary(mode="constants", constants={"alpha": 1.0}, exit_code=0)
    data = json.loads(summary.to_json())
    assert data["mode"] == "constants"
    assert data["rows"] == [] and summary.converged_count == 0
    assert np.isclose(data["constants"]["alpha"], 1.0)
