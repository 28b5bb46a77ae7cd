"""Noise sampling, coarsening, integrals and the binary dump format."""

import io
import struct

import numpy as np
import pytest

from nuwave.errors import ConfigurationError
from nuwave.noise import (CovarianceSpectrum, NoisePath, coarsen, dump_path,
                          load_path, power_law_spectrum, sample_path,
                          stochastic_integral)
from nuwave.spectral import SpectralField, make_basis

# Frozen counter-based generator output for seed 42, b = (1, 1/4), J = 4,
# T = 1. Any change to the sampling pipeline shows up here first.
GOLDEN_INCREMENTS = np.array([
    [-0.5521997614460576, 0.09456405503681875,
     0.02300046441061118, -1.0538372663738222],
    [-0.12957822640018477, 0.01275870712034032,
     -0.3885590464026349, 0.2614963750576751],
])


def test_sample_path_regression_golden():
    sp = CovarianceSpectrum(np.array([1.0, 0.25]))
    path = sample_path(sp, 1.0, 4, 42)
    assert np.array_equal(path.increments, GOLDEN_INCREMENTS)
    assert path.seed == 42
    # the same normals scale by sqrt(dt): doubling the horizon multiplies
    # every increment by sqrt(2)
    path2 = sample_path(sp, 2.0, 4, 42)
    assert np.allclose(path2.increments, GOLDEN_INCREMENTS * np.sqrt(2.0),
                       rtol=1e-15)


def test_sample_path_determinism_and_seed_sensitivity():
    sp = power_law_spectrum(5)
    a = sample_path(sp, 1.0, 32, 7)
    b = sample_path(sp, 1.0, 32, 7)
    c = sample_path(sp, 1.0, 32, 8)
    assert np.array_equal(a.increments, b.increments)
    assert not np.array_equal(a.increments, c.increments)


def test_increment_variance_matches_spectrum():
    b = np.array([2.0, 0.5, 0.125])
    sp = CovarianceSpectrum(b)
    path = sample_path(sp, 4.0, 4096, 123)
    dt = 4.0 / 4096
    sample_var = path.increments.var(axis=1, ddof=1)
    # chi-square window: relative error ~ sqrt(2/J) ~ 0.022, allow 5 sigma
    assert np.all(np.abs(sample_var / (b * dt) - 1.0) < 0.11)


def test_power_law_spectrum_values_and_trace():
    sp = power_law_spectrum(4, exponent=2.0, amplitude=3.0)
    assert np.allclose(sp.b, 3.0 / np.array([1.0, 4.0, 9.0, 16.0]), rtol=1e-15)
    assert sp.trace == pytest.approx(sp.b.sum(), rel=1e-15)
    basis = make_basis(1.0, 4)
    assert sp.weighted_trace(basis) == pytest.approx(
        float(np.sum(basis.eigenvalues * sp.b)), rel=1e-14)


def test_spectrum_rejects_negative_variance():
    with pytest.raises(ConfigurationError):
        CovarianceSpectrum(np.array([1.0, -0.1]))


def test_path_times_and_cumulative():
    sp = power_law_spectrum(2)
    path = sample_path(sp, 2.0, 8, 1)
    assert path.dt == pytest.approx(0.25)
    assert np.allclose(path.times(), np.arange(9) * 0.25)
    cum = path.cumulative()
    assert cum.shape == (2, 9)
    assert np.allclose(cum[:, 0], 0.0)
    assert np.allclose(cum[:, -1], path.increments.sum(axis=1), rtol=1e-15)


def test_coarsen_preserves_shared_partial_sums():
    sp = power_law_spectrum(3)
    fine = sample_path(sp, 1.0, 64, 99)
    coarse = coarsen(fine, 4)
    assert coarse.n_steps == 16
    assert coarse.horizon == fine.horizon
    assert coarse.seed == fine.seed
    # block sums reproduce the cumulative path at shared times up to
    # summation-order rounding
    assert np.allclose(coarse.cumulative()[:, 1:],
                       fine.cumulative()[:, 4::4], rtol=0, atol=1e-14)
    with pytest.raises(ConfigurationError):
        coarsen(fine, 5)  # 64 not divisible by 5
    with pytest.raises(ConfigurationError):
        coarsen(fine, 0)


def test_stochastic_integral_constant_field():
    basis = make_basis(1.0, 3)
    sp = power_law_spectrum(3)
    path = sample_path(sp, 1.0, 16, 5)
    phi = SpectralField(np.array([1.0, -2.0, 0.5]), basis)
    got = stochastic_integral(path, phi)
    want = float(phi.coeffs @ path.increments.sum(axis=1))
    assert got == pytest.approx(want, rel=1e-14)


def test_stochastic_integral_left_endpoint_rule():
    # two-step path against a hand-expanded left-point sum
    sp = CovarianceSpectrum(np.array([1.0]))
    inc = np.array([[0.3, -0.7]])
    path = NoisePath(horizon=1.0, increments=inc,
                     mode_variances=sp.b, seed=0)

    def phi(t):
        return np.array([1.0 + t])

    got = stochastic_integral(path, phi)
    want = 1.0 * 0.3 + 1.5 * (-0.7)
    assert got == pytest.approx(want, rel=1e-14)


def test_ito_isometry_statistics():
    basis = make_basis(1.0, 3)
    b = np.array([1.0, 0.5, 0.25])
    sp = CovarianceSpectrum(b)
    phi = SpectralField(np.array([0.7, -1.1, 0.4]), basis)
    vals = []
    for seed in range(1500):
        path = sample_path(sp, 2.0, 8, seed)
        vals.append(stochastic_integral(path, phi))
    vals = np.asarray(vals)
    want = float(np.sum(phi.coeffs ** 2 * b)) * 2.0
    # 5 sigma window on the sample variance of 1500 gaussians
    tol = want * np.sqrt(2.0 / 1499) * 5
    assert abs(vals.var(ddof=1) - want) < tol
    assert abs(vals.mean()) < 5 * np.sqrt(want / 1500)


def test_dump_load_roundtrip_and_layout():
    sp = CovarianceSpectrum(np.array([1.0, 0.25]))
    path = sample_path(sp, 1.5, 6, 77)
    buf = io.BytesIO()
    dump_path(path, buf)
    raw = buf.getvalue()
    # documented layout: <QQQd header, then b, then increments row-major
    seed, n, j, horizon = struct.unpack_from("<QQQd", raw, 0)
    assert (seed, n, j) == (77, 2, 6)
    assert horizon == 1.5
    b = np.frombuffer(raw, dtype="<f8", count=2, offset=32)
    assert np.array_equal(b, path.mode_variances)
    inc = np.frombuffer(raw, dtype="<f8", count=12, offset=48).reshape(2, 6)
    assert np.array_equal(inc, path.increments)

    buf.seek(0)
    back = load_path(buf)
    assert np.array_equal(back.increments, path.increments)
    assert np.array_equal(back.mode_variances, path.mode_variances)
    assert back.seed == path.seed and back.horizon == path.horizon


def test_dump_load_path_argument(tmp_path):
    sp = power_law_spectrum(3)
    path = sample_path(sp, 1.0, 8, 11)
    target = tmp_path / "path.bin"
    dump_path(path, target)
    back = load_path(target)
    assert np.array_equal(back.increments, path.increments)


def test_load_rejects_truncated_dumps():
    sp = power_law_spectrum(2)
    path = sample_path(sp, 1.0, 4, 1)
    buf = io.BytesIO()
    dump_path(path, buf)
    raw = buf.getvalue()
    with pytest.raises(ConfigurationError):
        load_path(io.BytesIO(raw[:20]))
    with pytest.raises(ConfigurationError):
        load_path(io.BytesIO(raw[:-8]))


def test_noise_path_validation():
    with pytest.raises(ConfigurationError):
        NoisePath(horizon=-1.0, increments=np.zeros((2, 4)),
                  mode_variances=np.zeros(2), seed=0)
    with pytest.raises(ConfigurationError):
        NoisePath(horizon=1.0, increments=np.zeros((2, 4)),
                  mode_variances=np.zeros(3), seed=0)
