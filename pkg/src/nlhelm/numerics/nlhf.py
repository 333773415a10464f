"""Binary field format NLHF.

Layout (little-endian throughout)::

    b"NLHF" | u32 version=1 | u32 N | N x u32 M | N x f64 L | M^N x f64 values

Values are row-major. Only cubic grids (equal M and L on every axis) can be read
back into a :class:`Grid`.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from nlhelm.errors import DomainError, FieldFormatError
from nlhelm.numerics.grid_field import SUPPORTED_DIMENSIONS, Grid, ScalarField

logger = logging.getLogger(__name__)

MAGIC = b"NLHF"
VERSION = 1

_U32 = np.dtype("<u4")
_F64 = np.dtype("<f8")


def encode_field(field: ScalarField) -> bytes:
    grid = field.grid
    header = np.array([VERSION, grid.N] + [grid.M] * grid.N, dtype=_U32).tobytes()
    extents = np.full(grid.N, grid.L, dtype=_F64).tobytes()
    body = np.ascontiguousarray(field.values, dtype=_F64).tobytes(order="C")
    return MAGIC + header + extents + body


def decode_field(data: bytes) -> ScalarField:
    if len(data) < 12 or data[:4] != MAGIC:
        raise FieldFormatError("missing NLHF magic bytes")
    version, N = np.frombuffer(data, dtype=_U32, count=2, offset=4)
    if version != VERSION:
        raise FieldFormatError(f"unsupported NLHF version {version}")
    if int(N) not in SUPPORTED_DIMENSIONS:
        raise FieldFormatError(f"NLHF dimension must be one of {SUPPORTED_DIMENSIONS}, got {N}")
    offset = 12
    header_end = offset + 4 * int(N) + 8 * int(N)
    if len(data) < header_end:
        raise FieldFormatError("truncated NLHF header")
    sizes = np.frombuffer(data, dtype=_U32, count=int(N), offset=offset)
    offset += 4 * int(N)
    extents = np.frombuffer(data, dtype=_F64, count=int(N), offset=offset)
    offset += 8 * int(N)
    if np.any(sizes != sizes[0]) or np.any(extents != extents[0]):
        raise FieldFormatError(f"non-cubic grids are not supported (M={sizes.tolist()}, L={extents.tolist()})")
    try:
        grid = Grid(int(N), int(sizes[0]), float(extents[0]))
    except DomainError as exc:
        raise FieldFormatError(f"invalid grid in NLHF header: {exc}") from exc
    expected = offset + 8 * grid.size
    if len(data) != expected:
        raise FieldFormatError(f"NLHF payload has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype=_F64, count=grid.size, offset=offset)
    try:
        return ScalarField(grid, values.astype(np.float64))
    except DomainError as exc:
        raise FieldFormatError(f"invalid NLHF values: {exc}") from exc


def write_field(path: str | Path, field: ScalarField) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_field(field))
    logger.debug("wrote %s (%d values)", path, field.grid.size)
    return path


def read_field(path: str | Path) -> ScalarField:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise FieldFormatError(f"cannot read field file {path}: {exc}") from exc
    return decode_field(data)
