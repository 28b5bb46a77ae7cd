"""Basis construction, transforms and pseudospectral nonlinearities."""

import numpy as np
import pytest
from scipy import integrate

from nuwave.errors import ConfigurationError, GridMismatchError
from nuwave.spectral import (Nonlinearity, SpectralField, apply_nonlinearity,
                             from_physical, inner_l2, make_basis, sobolev_norm,
                             to_physical, unit_mode, zero_field)


def test_eigenvalues_closed_form():
    basis = make_basis(2.5, 6)
    k = np.arange(1, 7)
    assert np.allclose(basis.eigenvalues, (k * np.pi / 2.5) ** 2, rtol=1e-15)
    assert np.all(np.diff(basis.eigenvalues) > 0)


@pytest.mark.parametrize("n_modes,n_nodes", [(4, 8), (7, 14), (5, 31), (3, 3)])
def test_discrete_orthogonality(n_modes, n_nodes):
    basis = make_basis(1.7, n_modes, n_nodes)
    gram = basis.analysis @ basis.synthesis
    assert np.max(np.abs(gram - np.eye(n_modes))) < 1e-13


def test_transform_roundtrip_exact():
    basis = make_basis(3.0, 12)
    rng = np.random.default_rng(0)
    u = SpectralField(rng.standard_normal(12), basis)
    back = from_physical(to_physical(u), basis)
    assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-13


def test_parseval_quadrature():
    # weight * sum of squared samples equals the squared L2 norm
    basis = make_basis(2.0, 9)
    rng = np.random.default_rng(1)
    u = SpectralField(rng.standard_normal(9), basis)
    samples = to_physical(u)
    assert basis.weight * np.sum(samples ** 2) == pytest.approx(
        np.sum(u.coeffs ** 2), rel=1e-13)


def test_cubic_projection_single_mode_analytic():
    # (a sqrt(2) sin(pi x))^3 projects onto a^3 * (3/2, 0, -1/2) exactly
    basis = make_basis(1.0, 5)
    a = 0.83
    u = unit_mode(basis, 1, a)
    cube = Nonlinearity.polynomial([0.0, 0.0, 0.0, 1.0])
    got = apply_nonlinearity(cube, u).coeffs
    want = np.zeros(5)
    want[0] = 1.5 * a ** 3
    want[2] = -0.5 * a ** 3
    assert np.max(np.abs(got - want)) < 1e-13


def test_cubic_projection_matches_adaptive_quadrature():
    # independent oracle: continuum projection integrals of f(u)
    basis = make_basis(1.0, 4)
    coeffs = np.array([0.9, -0.4, 0.2, 0.05])
    u = SpectralField(coeffs, basis)
    nlin = Nonlinearity.cubic_default()

    def u_of_x(x):
        k = np.arange(1, 5)
        return float(np.sqrt(2.0) * np.sin(np.pi * x * k) @ coeffs)

    got = apply_nonlinearity(nlin, u).coeffs
    for mode in range(1, 5):
        val, err = integrate.quad(
            lambda x: (lambda s: s - s ** 3)(u_of_x(x))
            * np.sqrt(2.0) * np.sin(mode * np.pi * x), 0.0, 1.0,
            limit=200, epsabs=1e-12)
        assert got[mode - 1] == pytest.approx(val, abs=5e-10)


def test_dealiasing_grid_is_enough_for_cubics():
    # M = 2N already agrees with a much finer grid on every retained mode
    rng = np.random.default_rng(2)
    coeffs = rng.standard_normal(8)
    nlin = Nonlinearity.cubic_default()
    tight = make_basis(1.0, 8)  # M = 16
    fine = make_basis(1.0, 8, 128)
    a = apply_nonlinearity(nlin, SpectralField(coeffs, tight)).coeffs
    b = apply_nonlinearity(nlin, SpectralField(coeffs, fine)).coeffs
    assert np.max(np.abs(a - b)) < 1e-12


def test_sobolev_norms():
    basis = make_basis(1.0, 3)
    u = SpectralField(np.array([2.0, 0.0, 1.0]), basis)
    lam = basis.eigenvalues
    assert sobolev_norm(u, 0.0) == pytest.approx(np.sqrt(5.0), rel=1e-14)
    want1 = np.sqrt(4.0 * lam[0] + lam[2])
    assert sobolev_norm(u, 1.0) == pytest.approx(want1, rel=1e-14)
    wantm1 = np.sqrt(4.0 / lam[0] + 1.0 / lam[2])
    assert sobolev_norm(u, -1.0) == pytest.approx(wantm1, rel=1e-14)


def test_inner_l2_orthonormal_modes():
    basis = make_basis(4.0, 6)
    e2 = unit_mode(basis, 2, 1.0)
    e5 = unit_mode(basis, 5, 3.0)
    assert inner_l2(e2, e5) == pytest.approx(0.0, abs=1e-15)
    assert inner_l2(e5, e5) == pytest.approx(9.0, rel=1e-14)


def test_nonlinearity_eval_and_antiderivative():
    nlin = Nonlinearity.polynomial([0.5, -1.0, 2.0, 0.25])
    s = np.linspace(-2, 2, 41)
    assert np.allclose(nlin(s), 0.5 - s + 2 * s ** 2 + 0.25 * s ** 3,
                       rtol=1e-14, atol=1e-14)
    # d/ds antiderivative == f, checked by central differences
    eps = 1e-6
    deriv = (nlin.antiderivative(s + eps) - nlin.antiderivative(s - eps)) / (2 * eps)
    assert np.max(np.abs(deriv - nlin(s))) < 1e-7


def test_cubic_default_coefficients():
    nlin = Nonlinearity.cubic_default()
    assert nlin.coeffs == (0.0, 1.0, 0.0, -1.0)
    s = np.array([-1.5, 0.0, 0.7])
    assert np.allclose(nlin(s), s - s ** 3)


def test_nonlinearity_growth_within_cubic_envelope():
    # the admissible class: |f(s)| <= 2 (1 + |s|^3), sampled over a wide range
    nlin = Nonlinearity.cubic_default()
    s = np.linspace(-50, 50, 2001)
    assert np.all(np.abs(nlin(s)) <= 2.0 * (1.0 + np.abs(s) ** 3))


def test_nonlinearity_rejects_higher_degree():
    with pytest.raises(ConfigurationError):
        Nonlinearity.polynomial([0.0, 1.0, 0.0, 0.0, 0.3])


def test_make_basis_collects_problems():
    with pytest.raises(ConfigurationError) as exc:
        make_basis(-1.0, 0)
    assert "length" in str(exc.value) and "n_modes" in str(exc.value)
    with pytest.raises(ConfigurationError):
        make_basis(1.0, 8, 4)  # grid smaller than mode count


def test_field_shape_and_basis_guards():
    basis = make_basis(1.0, 4)
    other = make_basis(1.0, 5)
    with pytest.raises(GridMismatchError):
        SpectralField(np.zeros(3), basis)
    u = zero_field(basis)
    w = zero_field(other)
    with pytest.raises(GridMismatchError):
        inner_l2(u, w)


def test_apply_nonlinearity_is_projection_of_pointwise_values():
    basis = make_basis(1.0, 6)
    rng = np.random.default_rng(3)
    u = SpectralField(rng.standard_normal(6) * 0.3, basis)
    nlin = Nonlinearity.cubic_default()
    direct = from_physical(nlin(to_physical(u)), basis)
    assert np.allclose(apply_nonlinearity(nlin, u).coeffs, direct.coeffs,
                       rtol=0, atol=1e-15)
