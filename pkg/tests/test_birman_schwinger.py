"""Tests for K, the constants alpha/beta/lambda0 and the PSD check on A_-."""
import numpy as np
import pytest
from scipy import linalg

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import Grid, lp_norm
from nlhelm.operators.birman_schwinger import (
    WeightedOperator,
    apply_K,
    check_negative_positivity,
    compute_alpha,
    compute_beta,
    compute_constants,
    lambda0,
    masked_matrix,
)
from nlhelm.operators.resolvent import build
from nlhelm.weights.presets import get_preset
from nlhelm.weights.profiles import WeightSpec, realize


def _dense_block(op, rows, cols):
    """(K e_b)_a for a in rows, b in cols, one basis vector at a time."""
    out = np.empty((rows.count, cols.count))
    for j, index in enumerate(map(tuple, cols.indices())):
        basis = op.grid.zeros().values.copy()
        basis[index] = 1.0
        out[:, j] = apply_K(op, op.grid.field(basis)).values[rows.indicator]
    return out


@pytest.fixture(scope="module")
def op2(resolvent, weight):
    return WeightedOperator.from_weight(resolvent, weight, 2.0)


def test_masked_matrix_matches_apply(op2):
    np.testing.assert_allclose(
        masked_matrix(op2, op2.aplus, op2.aminus),
        _dense_block(op2, op2.aplus, op2.aminus),
        rtol=1e-10, atol=1e-14,
    )


def test_alpha_is_top_eigenvalue_for_p2(op2):
    expected = linalg.eigvalsh(_dense_block(op2, op2.aplus, op2.aplus))[-1]
    alpha, phi0 = compute_alpha(op2, 4)
    assert alpha == pytest.approx(expected, rel=1e-8)
    assert lp_norm(phi0, 2.0) == pytest.approx(1.0)


def test_beta_is_top_singular_value_for_p2(op2):
    expected = linalg.svdvals(_dense_block(op2, op2.aplus, op2.aminus))[0]
    beta, psi = compute_beta(op2, 4)
    assert beta == pytest.approx(expected, rel=1e-8)
    assert not np.any(psi.values[~op2.aminus.indicator])


def test_constants_for_p4(op, consts):
    assert consts.alpha > 0 and consts.beta > 0
    assert consts.lambda0 == pytest.approx((2 * consts.beta / consts.alpha) ** 4)
    phi0 = consts.phi0.values
    assert np.all(phi0 >= 0)
    assert not np.any(phi0[~op.aplus.indicator])
    assert lp_norm(consts.phi0, op.p_conj) == pytest.approx(1.0)
    # alpha is attained at phi0
    assert op.pair(phi0, op.apply(phi0)) == pytest.approx(consts.alpha, rel=1e-8)


def test_constants_are_deterministic_across_workers(op, consts):
    threaded = compute_constants(op, 4, workers=3)
    assert threaded.alpha == consts.alpha
    assert threaded.beta == consts.beta


def test_beta_vanishes_without_defocusing_part(resolvent, focusing_weight):
    op = WeightedOperator.from_weight(resolvent, focusing_weight, 4.0)
    beta, psi = compute_beta(op)
    assert beta == 0.0
    assert not psi.values.any()
    assert compute_constants(op, 2).lambda0 == 0.0


def test_alpha_requires_focusing_part(resolvent, grid):
    values = np.zeros(grid.shape)
    values[4, 4] = -1.0
    op = WeightedOperator.from_weight(resolvent, grid.field(values), 4.0)
    with pytest.raises(DomainError):
        compute_alpha(op)


def test_lambda0_formula():
    assert lambda0(2.0, 1.0, 3.0) == 1.0
    assert lambda0(1.0, 0.0, 4.0) == 0.0
    with pytest.raises(DomainError):
        lambda0(0.0, 1.0, 4.0)


def test_operator_validates_exponent(resolvent, weight):
    with pytest.raises(DomainError):
        WeightedOperator.from_weight(resolvent, weight, 1.5)


def test_positivity_passes_for_small_defocusing_ball(op):
    smallest, passed = check_negative_positivity(op)
    assert passed
    lanczos, passed_sparse = check_negative_positivity(op, dense_limit=0)
    assert passed_sparse
    assert lanczos == pytest.approx(smallest, rel=1e-6, abs=1e-12)


def test_positivity_fails_for_wide_defocusing_region():
    preset = get_preset("wide_defocusing_2d")
    grid = Grid(2, 64, 16)
    Q = realize(WeightSpec(preset["kind"], preset["parameters"]), grid)
    op = WeightedOperator.from_weight(build(grid), Q, 4.0)
    smallest, passed = check_negative_positivity(op)
    assert smallest < 0
    assert not passed
