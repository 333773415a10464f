"""Run summaries and the files a run leaves behind.

Per run: ``summary.csv``, ``constants.csv``, ``diagnostics.csv`` and, per lambda
index i, ``u_i.nlhf``, ``phi_i.nlhf``, ``psi_i.nlhf``, ``slice_i.csv`` (plus
``uk_i.nlhf`` for wavenumber k != 1).
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence


from nlhelm.numerics.grid_field import ScalarField
from nlhelm.numerics.nlhf import write_field
from nlhelm.variational.reconstruction import SolutionRecord

logger = logging.getLogger(__name__)

SUMMARY_HEADER = (
    "lambda", "converged", "level", "phi_norm", "psi_norm",
    "u_norm_p", "res_integral", "res_pde", "iters", "restarts",
)
DIAGNOSTICS_HEADER = (
    "lambda", "grad_norm", "grad_tol", "chain_identity", "r_lambda",
    "sphere_bound", "endpoint_norm", "res_pde_k", "message",
)
CONSTANTS_HEADER = ("name", "value")


def _number(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ---------------------------------------------------------------------------
# Summary types
# ---------------------------------------------------------------------------
@dataclass
class SummaryRow:
    lam: float
    converged: bool
    level: float
    phi_norm: float
    psi_norm: float
    u_norm_p: float
    res_integral: float
    res_pde: float
    iters: int
    restarts: int
    grad_norm: float = math.nan
    grad_tol: float = math.nan
    chain_identity: float = math.nan
    r_lambda: float = math.nan
    sphere_bound: float = math.nan
    endpoint_norm: float = math.nan
    res_pde_k: float | None = None
    message: str = ""

    def summary_cells(self) -> list[str]:
        values = (self.lam, self.converged, self.level, self.phi_norm, self.psi_norm,
                  self.u_norm_p, self.res_integral, self.res_pde, self.iters, self.restarts)
        return [_number(v) for v in values]

    def diagnostic_cells(self) -> list[str]:
        values = (self.lam, self.grad_norm, self.grad_tol, self.chain_identity, self.r_lambda,
                  self.sphere_bound, self.endpoint_norm, self.res_pde_k, self.message)
        return [_number(v) for v in values]


@dataclass
class RunSummary:
    """Outcome of one pipeline run: constants, per-lambda rows, errors and exit code."""

    mode: str
    constants: dict[str, Any] = field(default_factory=dict)
    rows: list[SummaryRow] = field(default_factory=list)
    skipped_lambdas: list[float] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    exit_code: int = 0
    output_dir: str | None = None

    @property
    def converged_count(self) -> int:
        return sum(1 for row in self.rows if row.converged)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "constants": self.constants,
            "rows": [asdict(row) for row in self.rows],
            "skipped_lambdas": self.skipped_lambdas,
            "errors": self.errors,
            "exit_code": self.exit_code,
            "output_dir": self.output_dir,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, default=str)


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------
def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def write_slice(path: Path, u: ScalarField) -> Path:
    """u on the plane through the origin spanned by the first two axes, long format."""
    grid = u.grid
    origin = grid.M // 2
    plane = u.values[(slice(None), slice(None)) + (origin,) * (grid.N - 2)]
    axis = grid.axis()
    rows = [
        [repr(float(axis[i])), repr(float(axis[j])), repr(float(plane[i, j]))]
        for i in range(grid.M)
        for j in range(grid.M)
    ]
    return _write_csv(path, ("x0", "x1", "u"), rows)


def _write_nlhf(path: Path, field_: ScalarField) -> Path:
    try:
        return write_field(path, field_)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def emit_outputs(
    summary: RunSummary,
    records: Sequence[SolutionRecord | None],
    directory: str | Path,
    *,
    write_fields: bool = True,
) -> list[Path]:
    """Write the CSV tables and, per reconstructed lambda, the field files.

    ``records[i]`` belongs to ``summary.rows[i]``; ``None`` entries (failed
    lambdas) get a table row but no field files.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc}") from exc

    written = [
        _write_csv(directory / "summary.csv", SUMMARY_HEADER, [row.summary_cells() for row in summary.rows]),
        _write_csv(
            directory / "constants.csv",
            CONSTANTS_HEADER,
            [[name, _number(value)] for name, value in summary.constants.items()],
        ),
        _write_csv(directory / "diagnostics.csv", DIAGNOSTICS_HEADER, [row.diagnostic_cells() for row in summary.rows]),
    ]
    if write_fields:
        for index, record in enumerate(records):
            if record is None:
                continue
            written.append(_write_nlhf(directory / f"u_{index}.nlhf", record.u))
            written.append(_write_nlhf(directory / f"phi_{index}.nlhf", record.phi))
            written.append(_write_nlhf(directory / f"psi_{index}.nlhf", record.psi))
            if record.scaled is not None:
                written.append(_write_nlhf(directory / f"uk_{index}.nlhf", record.scaled))
            written.append(write_slice(directory / f"slice_{index}.csv", record.u))
    logger.info("wrote %d output files to %s", len(written), directory)
    return written


def read_summary(path: str | Path) -> list[dict[str, str]]:
    """Rows of a summary.csv as dicts (string values)."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))
