"""Tests for the NLHF binary field format."""
import numpy as np
import pytest

from nlhelm.errors import FieldFormatError
from nlhelm.numerics.grid_field import Grid
from nlhelm.numerics.nlhf import MAGIC, decode_field, encode_field, read_field, write_field


@pytest.fixture
def field():
    grid = Grid(2, 8, 1.5)
    return grid.field(np.arange(grid.size, dtype=float).reshape(grid.shape) - 10.0)


def test_layout(field):
    data = encode_field(field)
    N, M = 2, 8
    assert data[:4] == MAGIC
    assert len(data) == 4 + 4 + 4 + 4 * N + 8 * N + 8 * M**N
    assert np.frombuffer(data, dtype="<u4", count=2 + N, offset=4).tolist() == [1, N, M, M]
    assert np.frombuffer(data, dtype="<f8", count=1, offset=12 + 4 * N)[0] == 1.5


def test_file_round_trip(tmp_path, field):
    path = write_field(tmp_path / "nested" / "u.nlhf", field)
    loaded = read_field(path)
    assert loaded.grid == field.grid
    np.testing.assert_array_equal(loaded.values, field.values)


@pytest.mark.parametrize("mutate", [
    lambda data: b"XXXX" + data[4:],
    lambda data: data[:-8],
    lambda data: data[:4] + (2).to_bytes(4, "little") + data[8:],
    lambda data: data[:10],
])
def test_malformed_input(field, mutate):
    with pytest.raises(FieldFormatError):
        decode_field(mutate(encode_field(field)))


def test_missing_file(tmp_path):
    with pytest.raises(FieldFormatError):
        read_field(tmp_path / "absent.nlhf")


@pytest.mark.parametrize("N", [0, 1, 7])
def test_unsupported_dimension_in_header(N):
    header = MAGIC + np.array([1, N], dtype="<u4").tobytes()
    with pytest.raises(FieldFormatError, match="dimension"):
        decode_field(header)
    with pytest.raises(FieldFormatError, match="dimension"):
        decode_field(header + bytes(64))
