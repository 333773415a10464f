"""Tests for J, the inner maximizer Z and the reduced functional."""
import numpy as np
import pytest

from nlhelm.errors import DomainError
from nlhelm.numerics.grid_field import lp_norm
from nlhelm.operators.birman_schwinger import WeightedOperator
from nlhelm.variational.dual_functional import (
    eval_J,
    eval_reduced,
    grad_phi,
    grad_psi,
    grad_reduced,
    solve_Z,
)

LAM = 3.0


@pytest.fixture(scope="module")
def phi(op):
    rng = np.random.default_rng(11)
    return op.aplus.restrict(op.grid.field(rng.random(op.grid.shape)))


def _on_minus(op, rng):
    return op.aminus.restrict(op.grid.field(rng.standard_normal(op.grid.shape)))


def test_Z_maximizes_inner_problem(op, phi):
    z, report = solve_Z(phi, op)
    assert report.converged
    assert report.optimality_residual <= 1e-9 * max(1.0, lp_norm(phi, op.p_conj) ** (op.p_conj - 1))
    best = eval_J(phi, z, LAM, op)
    rng = np.random.default_rng(2)
    for _ in range(5):
        other = z + 0.1 * _on_minus(op, rng)
        assert eval_J(phi, other, LAM, op) <= best + 1e-12


def test_grad_psi_vanishes_at_Z(op, phi):
    z, _ = solve_Z(phi, op)
    assert lp_norm(grad_psi(phi, z, LAM, op), op.p) <= 1e-8


def test_J_is_concave_in_psi(op, phi):
    rng = np.random.default_rng(5)
    a, b = _on_minus(op, rng), _on_minus(op, rng)
    middle = eval_J(phi, 0.5 * (a + b), LAM, op)
    assert middle >= 0.5 * (eval_J(phi, a, LAM, op) + eval_J(phi, b, LAM, op)) - 1e-12


def test_warm_start_reaches_same_maximizer(op, phi):
    z, _ = solve_Z(phi, op)
    warm, report = solve_Z(phi, op, psi0=z)
    assert report.iterations <= 1
    np.testing.assert_allclose(warm.values, z.values, atol=1e-10)


def test_reduced_gradient_matches_finite_differences(op, phi):
    rng = np.random.default_rng(9)
    direction = op.aplus.restrict(op.grid.field(rng.standard_normal(op.grid.shape)))
    eps = 1e-5
    up, _ = eval_reduced(phi + eps * direction, LAM, op, 1e-11)
    down, _ = eval_reduced(phi - eps * direction, LAM, op, 1e-11)
    slope = op.pair(grad_reduced(phi, LAM, op, 1e-11).values, direction.values)
    assert (up - down) / (2 * eps) == pytest.approx(slope, rel=1e-5, abs=1e-9)


def test_reduced_gradient_is_grad_phi_at_Z(op, phi):
    z, _ = solve_Z(phi, op)
    np.testing.assert_allclose(
        grad_reduced(phi, LAM, op).values, grad_phi(phi, z, LAM, op).values, atol=1e-10,
    )
    value, z_again = eval_reduced(phi, LAM, op)
    assert value == pytest.approx(eval_J(phi, z_again, LAM, op), rel=1e-10)


def test_empty_defocusing_part_gives_closed_form(resolvent, focusing_weight):
    op = WeightedOperator.from_weight(resolvent, focusing_weight, 4.0)
    phi = op.aplus.restrict(op.grid.field(np.ones(op.grid.shape)))
    z, report = solve_Z(phi, op)
    assert not z.values.any()
    assert report.iterations == 0
    pc = op.p_conj
    expected = LAM ** (1 - pc) / pc * lp_norm(phi, pc) ** pc - 0.5 * op.pair(phi.values, op.apply(phi.values))
    value, _ = eval_reduced(phi, LAM, op)
    assert value == pytest.approx(expected, rel=1e-12)


def test_supports_are_enforced(op, phi):
    outside = op.grid.field(np.where(op.aplus.indicator, 0.0, 1.0))
    with pytest.raises(DomainError):
        solve_Z(outside, op)
    with pytest.raises(DomainError):
        eval_J(phi, phi, LAM, op)
    with pytest.raises(DomainError):
        eval_J(phi, op.grid.zeros(), 0.0, op)


def test_Z_of_zero_is_zero(op):
    z, report = solve_Z(op.grid.zeros(), op)
    assert not z.values.any()
    assert report.iterations == 0
    assert report.objective == 0.0


def test_Z_norm_is_bounded_by_beta(op, consts, phi):
    pc = op.p_conj
    for scale in (0.1, 1.0, 10.0):
        z, _ = solve_Z(scale * phi, op)
        bound = (pc * consts.beta * lp_norm(scale * phi, pc)) ** (1 / (pc - 1))
        assert lp_norm(z, pc) <= bound * (1 + 1e-6)


def test_Z_does_not_depend_on_the_start(op, phi):
    rng = np.random.default_rng(21)
    first, _ = solve_Z(phi, op, psi0=_on_minus(op, rng))
    second, _ = solve_Z(phi, op, psi0=10.0 * _on_minus(op, rng))
    assert lp_norm(first - second, op.p_conj) <= 1e-6 * (1 + lp_norm(phi, op.p_conj))


def test_Z_is_continuous(op, phi):
    rng = np.random.default_rng(22)
    direction = op.aplus.restrict(op.grid.field(rng.standard_normal(op.grid.shape)))
    direction = direction * (1.0 / lp_norm(direction, op.p_conj))
    z, _ = solve_Z(phi, op, 1e-13)
    gaps = [lp_norm(solve_Z(phi + size * direction, op, 1e-13)[0] - z, op.p_conj) for size in (1e-2, 1e-3, 1e-4)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3


@pytest.mark.parametrize("scale", [1.0, 10.0, 100.0])
def test_inner_solve_converges_quickly_for_large_phi(op, phi, scale):
    target = scale * phi
    tol = 1e-12 * max(1.0, lp_norm(target, op.p_conj) ** (op.p_conj - 1))
    _, report = solve_Z(target, op, tol)
    assert report.converged
    assert report.iterations <= 50
    assert report.optimality_residual <= 10 * tol


def test_unattainable_inner_tolerance_stops_at_roundoff(op, phi):
    _, report = solve_Z(1e4 * phi, op, 1e-30)
    assert report.converged


def test_matrix_free_inner_solve_matches_dense(op, phi, monkeypatch):
    dense, _ = solve_Z(10.0 * phi, op, 1e-12)
    monkeypatch.setattr("nlhelm.variational.dual_functional.DENSE_BLOCK_LIMIT", 0)
    free, report = solve_Z(10.0 * phi, op, 1e-12)
    assert report.converged
    np.testing.assert_allclose(free.values, dense.values, rtol=1e-8, atol=1e-10)


def test_partial_gradients_match_finite_differences(op, phi):
    rng = np.random.default_rng(23)
    psi = _on_minus(op, rng)
    d_phi = op.aplus.restrict(op.grid.field(rng.standard_normal(op.grid.shape)))
    d_psi = _on_minus(op, rng)
    eps = 1e-6
    slope_phi = (eval_J(phi + eps * d_phi, psi, LAM, op) - eval_J(phi - eps * d_phi, psi, LAM, op)) / (2 * eps)
    assert slope_phi == pytest.approx(op.pair(grad_phi(phi, psi, LAM, op).values, d_phi.values), rel=1e-5, abs=1e-10)
    slope_psi = (eval_J(phi, psi + eps * d_psi, LAM, op) - eval_J(phi, psi - eps * d_psi, LAM, op)) / (2 * eps)
    assert slope_psi == pytest.approx(op.pair(grad_psi(phi, psi, LAM, op).values, d_psi.values), rel=1e-5, abs=1e-10)


def test_energies_do_not_increase_with_lambda(op, phi):
    rng = np.random.default_rng(24)
    psi = _on_minus(op, rng)
    lambdas = (1.0, 2.0, 10.0)
    J_values = [eval_J(phi, psi, lam, op) for lam in lambdas]
    reduced = [eval_reduced(phi, lam, op)[0] for lam in lambdas]
    assert J_values[0] > J_values[1] > J_values[2]
    assert reduced[0] > reduced[1] > reduced[2]
