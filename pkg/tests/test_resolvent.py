"""Tests for the truncated-kernel resolvent R."""
import numpy as np
import pytest

from nlhelm.errors import DomainError, GridMismatchError
from nlhelm.numerics.grid_field import Grid, ScalarField, discrete_laplacian, inner
from nlhelm.operators.resolvent import apply_R, build, estimate_operator_norm


def test_apply_matches_dense_sum():
    grid = Grid(2, 8, 2)
    op = build(grid)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(grid.shape)
    idx = np.argwhere(np.ones(grid.shape, dtype=bool))
    dense = op.kernel_block(idx, idx) * grid.cell_volume
    np.testing.assert_allclose(op.apply(f).ravel(), dense @ f.ravel(), rtol=1e-10, atol=1e-12)


def test_kernel_is_symmetric(resolvent, grid):
    rng = np.random.default_rng(1)
    f = grid.field(rng.standard_normal(grid.shape))
    g = grid.field(rng.standard_normal(grid.shape))
    assert inner(apply_R(resolvent, f), g) == pytest.approx(inner(f, apply_R(resolvent, g)), rel=1e-10)


def test_origin_cell_is_regularized(resolvent):
    samples = resolvent.kernel_samples
    assert np.all(np.isfinite(samples))
    assert samples[(0,) * resolvent.grid.N] == resolvent.origin_cell_value
    assert resolvent.origin_cell_value > samples[1, 0]


def test_helmholtz_residual_converges_at_second_order():
    """-Delta_h (R f) - R f = f up to O(h^2) away from the box edge."""
    errors = []
    for M in (64, 128, 256):
        grid = Grid(2, M, 6.0)
        r2 = grid.radius() ** 2
        f = grid.field(np.exp(-r2 / 0.25))
        u = apply_R(build(grid), f)
        defect = -discrete_laplacian(u).values - u.values - f.values
        errors.append(float(np.max(np.abs(defect[grid.window().indicator]))))
    order = np.log2(errors[1] / errors[2])
    assert errors[2] < errors[1] < errors[0]
    assert 1.5 <= order <= 2.5


def test_norm_estimate_is_reproducible(resolvent, grid):
    support = ScalarField(grid, grid.window(0.5).indicator)
    first = estimate_operator_norm(resolvent, 4.0, 10, rng=np.random.default_rng(7), support=support)
    second = estimate_operator_norm(resolvent, 4.0, 10, rng=np.random.default_rng(7), support=support)
    assert first > 0 and np.isfinite(first)
    assert first == second


def test_norm_estimate_rejects_small_exponent(resolvent):
    with pytest.raises(DomainError):
        estimate_operator_norm(resolvent, 2.0)


def test_apply_R_checks_grid(resolvent):
    with pytest.raises(GridMismatchError):
        apply_R(resolvent, Grid(2, 16, 4).zeros())


def test_apply_is_linear(resolvent, grid):
    rng = np.random.default_rng(2)
    f = grid.field(rng.standard_normal(grid.shape))
    g = grid.field(rng.standard_normal(grid.shape))
    combined = apply_R(resolvent, 2.5 * f - 0.75 * g).values
    separate = 2.5 * apply_R(resolvent, f).values - 0.75 * apply_R(resolvent, g).values
    np.testing.assert_allclose(combined, separate, rtol=1e-10, atol=1e-12 * np.abs(separate).max())


def test_pairing_converges_under_refinement():
    values = []
    for M in (64, 128, 256):
        grid = Grid(2, M, 6.0)
        x = grid.coordinates()
        f = grid.field(np.exp(-((x[0] + 0.7) ** 2 + x[1] ** 2) / 0.25))
        g = grid.field(np.exp(-((x[0] - 0.7) ** 2 + x[1] ** 2) / 0.25))
        values.append(inner(f, apply_R(build(grid), g)))
    assert abs(values[2] - values[1]) < abs(values[1] - values[0])
    assert abs(values[2] - values[1]) <= 1e-2 * abs(values[2])
