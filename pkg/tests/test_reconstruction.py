"""Tests for the primal reconstruction and its residuals."""
import numpy as np
import pytest

from nlhelm.errors import DomainError
from nlhelm.variational.mountain_pass import MpOptions, find_critical_point
from nlhelm.variational.reconstruction import (
    build_u,
    chain_identity,
    q_lambda,
    reconstruct,
    rescale_to_k,
    residual_integral,
    residual_pde,
    residual_pde_scaled,
)


@pytest.fixture(scope="module")
def sample(op):
    rng = np.random.default_rng(4)
    phi = op.aplus.restrict(op.grid.field(rng.random(op.grid.shape)))
    psi = op.aminus.restrict(op.grid.field(rng.random(op.grid.shape)))
    return phi, psi


def test_build_u_applies_resolvent_to_weighted_density(op, sample):
    phi, psi = sample
    u = build_u(phi, psi, op)
    expected = op.resolvent.apply(op.weight_root.values * (phi.values - psi.values))
    np.testing.assert_allclose(u.values, expected)


def test_q_lambda_scales_only_focusing_part(op):
    q = q_lambda(op, 5.0)
    Q = op.weight.values
    np.testing.assert_allclose(q[Q > 0], 5.0 * Q[Q > 0])
    np.testing.assert_allclose(q[Q < 0], Q[Q < 0])


def test_rescale_to_k(op, sample):
    u = build_u(*sample, op)
    assert rescale_to_k(u, 1.0, op.p) is u
    v = rescale_to_k(u, 2.0, op.p)
    assert v.grid.L == pytest.approx(op.grid.L / 2)
    np.testing.assert_allclose(v.values, 2.0 ** (2 / (op.p - 2)) * u.values)
    with pytest.raises(DomainError):
        rescale_to_k(u, 0.0, op.p)


@pytest.mark.parametrize("k", [0.5, 3.0])
def test_scaled_residual_is_invariant(op, sample, k):
    """The k-form residual of the rescaled field equals the k = 1 residual."""
    u = build_u(*sample, op)
    v = rescale_to_k(u, k, op.p)
    assert residual_pde_scaled(v, k, 2.0, op) == pytest.approx(residual_pde(u, 2.0, op), rel=1e-9)


def test_reconstruct_reports_consistent_norms(op, consts):
    lam = max(2.0, 2.0 * consts.lambda0)
    opts = MpOptions(nodes=9, max_iters=300, restarts=1, tol_mp=1e-8, tol_inner=1e-12)
    result = find_critical_point(lam, consts, op, opts)
    assert result.converged, result.message
    record = reconstruct(result, op, wavenumber=2.0)
    u_norm, phi_norm, psi_norm = record.norms
    assert u_norm == pytest.approx(op.norm(record.u.values, op.p))
    assert phi_norm == pytest.approx(op.norm(result.phi_star.values, op.p_conj))
    assert psi_norm == pytest.approx(op.norm(result.psi_star.values, op.p_conj))
    assert record.scaled is not None
    assert record.residual_pde_scaled == pytest.approx(record.residual_pde, rel=1e-9)
    assert np.all(record.v(op).values[~op.aplus.indicator] == 0)
    assert np.all(record.w(op).values[~op.aminus.indicator] == 0)
    assert record.residual_integral <= 1e-6
    assert record.chain_identity <= 1e-6
    assert residual_integral(record.u, lam, op) == pytest.approx(record.residual_integral)
    assert chain_identity(record.u, result.phi_star, result.psi_star, lam, op) == pytest.approx(record.chain_identity)
