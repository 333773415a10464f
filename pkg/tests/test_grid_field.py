"""Tests for grids, fields, masks and the quadrature helpers."""
import numpy as np
import pytest

from nlhelm.errors import DomainError, GridMismatchError
from nlhelm.numerics.grid_field import (
    Grid,
    ScalarField,
    SupportMask,
    discrete_laplacian,
    dual_map,
    inner,
    lp_norm,
    mask_from_weight,
)


def test_grid_geometry():
    grid = Grid(2, 16, 4)
    assert grid.h == 0.5
    assert grid.shape == (16, 16)
    assert grid.cell_volume == 0.25
    assert grid.axis()[grid.M // 2] == 0.0
    assert grid.radius()[grid.origin_index] == 0.0


@pytest.mark.parametrize("args", [(1, 16, 4.0), (2, 12, 4.0), (2, 4, 4.0), (2, 16, 0.0)])
def test_grid_rejects_invalid(args):
    with pytest.raises(DomainError):
        Grid(*args)


def test_window_counts_cells():
    grid = Grid(2, 16, 4)
    # nodes -2, -1.5, ..., 1.5 on each axis
    assert grid.window(0.5).count == 64


def test_field_is_immutable_and_finite():
    grid = Grid(2, 8, 1)
    f = grid.field(np.ones(grid.size))
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0
    with pytest.raises(DomainError):
        grid.field(np.full(grid.shape, np.nan))
    with pytest.raises(GridMismatchError):
        grid.field(np.ones(10))


def test_norms_and_pairing_use_midpoint_rule():
    grid = Grid(2, 8, 2)
    f = grid.field(np.full(grid.shape, 2.0))
    area = (2 * grid.L) ** 2
    assert lp_norm(f, 3.0) == pytest.approx(2.0 * area ** (1 / 3))
    assert inner(f, f) == pytest.approx(4.0 * area)
    assert lp_norm(grid.zeros(), 1.5) == 0.0


def test_dual_map_inverts_conjugate():
    grid = Grid(2, 8, 1)
    rng = np.random.default_rng(3)
    g = grid.field(rng.standard_normal(grid.shape))
    p = 4.0
    pc = p / (p - 1)
    np.testing.assert_allclose(dual_map(dual_map(g, p), pc).values, g.values, rtol=1e-12)
    assert inner(dual_map(g, p), g) == pytest.approx(lp_norm(g, p) ** p)


def test_discrete_laplacian_on_periodic_mode():
    """A grid-periodic cosine is an exact eigenvector of the 5-point Laplacian."""
    grid = Grid(2, 32, 3)
    x, y = grid.coordinates()
    omega = 2 * np.pi * 3 / (2 * grid.L)
    f = grid.field(np.cos(omega * x) * np.cos(omega * y))
    eigen = 2 * (2 * np.cos(omega * grid.h) - 2) / grid.h**2
    np.testing.assert_allclose(discrete_laplacian(f).values, eigen * f.values, atol=1e-10)


def test_masks_from_weight():
    grid = Grid(2, 8, 1)
    values = np.zeros(grid.shape)
    values[1, 1] = 1.0
    values[5, 5] = -2.0
    aplus, aminus = mask_from_weight(grid.field(values))
    assert aplus.count == 1 and aminus.count == 1
    assert (aplus & aminus).is_empty
    np.testing.assert_allclose(aminus.centers(), [[-1 + 5 * grid.h, -1 + 5 * grid.h]])
    restricted = aplus.restrict(ScalarField(grid, np.ones(grid.shape)))
    assert restricted.values.sum() == 1.0


def test_mixing_grids_fails():
    a, b = Grid(2, 8, 1), Grid(2, 8, 2)
    with pytest.raises(GridMismatchError):
        a.zeros() + b.zeros()
    with pytest.raises(GridMismatchError):
        SupportMask(a, np.ones(a.shape, dtype=bool)) & SupportMask(b, np.ones(b.shape, dtype=bool))


@pytest.mark.parametrize("q", [4.0, 4.0 / 3.0])
def test_pairing_obeys_hoelder(q):
    grid = Grid(3, 8, 1.5)
    rng = np.random.default_rng(13)
    q_conj = q / (q - 1)
    for _ in range(10):
        f = grid.field(rng.standard_normal(grid.shape))
        g = grid.field(rng.standard_normal(grid.shape) ** 3)
        assert abs(inner(f, g)) <= lp_norm(f, q) * lp_norm(g, q_conj) + 1e-12
    assert abs(inner(f, dual_map(f, q))) == pytest.approx(lp_norm(f, q) * lp_norm(dual_map(f, q), q_conj))
