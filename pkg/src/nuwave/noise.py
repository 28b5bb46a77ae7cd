"""Q-Wiener increments on the sine basis: sampling, coarsening, integrals.

The driving noise is W(t, x) = sum_k sqrt(b_k) e_k(x) w_k(t) with
independent scalar Brownian motions w_k. A path is stored as the array
of increments dW[k, j] over a uniform grid; mode k increments are
N(0, b_k * dt) and independent across modes and steps.

Sampling uses the counter-based Philox generator keyed by the path seed,
so a path is reproducible regardless of what else has been sampled.
Coarser grids must be derived from a fine path with coarsen() rather
than resampled, so that every model in a comparison consumes the same
underlying Brownian path.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import ConfigurationError, GridMismatchError
from .spectral import SpectralBasis, SpectralField

__all__ = [
    "CovarianceSpectrum",
    "NoisePath",
    "power_law_spectrum",
    "sample_path",
    "coarsen",
    "stochastic_integral",
    "dump_path",
    "load_path",
]


@dataclass(frozen=True, eq=False)
class CovarianceSpectrum:
    """Eigenvalues b_k >= 0 of the noise covariance on the sine basis."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.ndim != 1 or b.shape[0] < 1:
            raise ConfigurationError("spectrum must be a non-empty 1-D array")
        if not np.all(np.isfinite(b)) or np.any(b < 0):
            raise ConfigurationError("spectrum entries must be finite and >= 0")
        object.__setattr__(self, "b", b)

    @property
    def n_modes(self) -> int:
        return self.b.shape[0]

    @property
    def trace(self) -> float:
        """tr Q = sum_k b_k."""
        return float(np.sum(self.b))

    def weighted_trace(self, basis: SpectralBasis) -> float:
        """sum_k lam_k b_k, the H^1-weighted trace."""
        if basis.n_modes != self.n_modes:
            raise GridMismatchError(
                "spectrum has %d modes, basis has %d" % (self.n_modes, basis.n_modes))
        return float(np.sum(basis.eigenvalues * self.b))


def power_law_spectrum(n_modes: int, exponent: float = 4.0,
                       amplitude: float = 1.0) -> CovarianceSpectrum:
    """b_k = amplitude * k^(-exponent); the default spectrum is k^-4."""
    if n_modes < 1:
        raise ConfigurationError("n_modes must be >= 1, got %d" % n_modes)
    if amplitude < 0:
        raise ConfigurationError("amplitude must be >= 0, got %r" % (amplitude,))
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    return CovarianceSpectrum(amplitude * k ** (-float(exponent)))


@dataclass(frozen=True, eq=False)
class NoisePath:
    """Increments of a Q-Wiener path on a uniform time grid.

    Attributes:
        horizon: final time T.
        increments: (N, J) array, increments[k, j] = w-increment of mode k
            over [j*dt, (j+1)*dt] already scaled by sqrt(b_k).
        mode_variances: the b_k used to scale the draws (echo of the spectrum).
        seed: generator seed used to draw the path.
    """

    horizon: float
    increments: np.ndarray = field(repr=False)
    mode_variances: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        inc = np.ascontiguousarray(self.increments, dtype=np.float64)
        if inc.ndim != 2:
            raise ConfigurationError("increments must be a (modes, steps) array")
        object.__setattr__(self, "increments", inc)
        object.__setattr__(
            self, "mode_variances",
            np.asarray(self.mode_variances, dtype=np.float64))
        if self.mode_variances.shape != (inc.shape[0],):
            raise ConfigurationError("mode_variances length must match increments")
        if not (self.horizon > 0):
            raise ConfigurationError("horizon must be positive")

    @property
    def n_modes(self) -> int:
        return self.increments.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    def times(self) -> np.ndarray:
        """Grid times t_0 = 0 .. t_J = T."""
        return np.linspace(0.0, self.horizon, self.n_steps + 1)

    def cumulative(self) -> np.ndarray:
        """W at grid times, shape (N, J+1), W(0) = 0."""
        out = np.zeros((self.n_modes, self.n_steps + 1))
        np.cumsum(self.increments, axis=1, out=out[:, 1:])
        return out


def sample_path(spectrum: CovarianceSpectrum, horizon: float, n_steps: int,
                seed: int) -> NoisePath:
    """Draw a fresh path on a uniform grid with J = n_steps increments.

    Mode k draws come from one Philox stream in fixed (mode-major) order,
    scaled by sqrt(b_k * dt). Modes with b_k = 0 get exactly zero.
    """
    if n_steps < 1:
        raise ConfigurationError("n_steps must be >= 1, got %d" % n_steps)
    if not (horizon > 0) or not np.isfinite(horizon):
        raise ConfigurationError("horizon must be positive and finite")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    dt = horizon / n_steps
    z = rng.standard_normal((spectrum.n_modes, n_steps))
    scale = np.sqrt(spectrum.b * dt)
    return NoisePath(
        horizon=float(horizon),
        increments=z * scale[:, None],
        mode_variances=spectrum.b.copy(),
        seed=int(seed),
    )


def coarsen(path: NoisePath, factor: int) -> NoisePath:
    """Sum consecutive increments to produce the same path on a grid
    coarser by an integer factor. Cumulative sums at shared times agree
    with the fine path up to rounding; the terminal value is preserved.
    """
    if factor < 1:
        raise ConfigurationError("factor must be >= 1, got %d" % factor)
    if path.n_steps % factor != 0:
        raise ConfigurationError(
            "factor %d does not divide %d steps" % (factor, path.n_steps))
    if factor == 1:
        return path
    n, j = path.n_modes, path.n_steps
    inc = path.increments.reshape(n, j // factor, factor).sum(axis=2)
    return NoisePath(
        horizon=path.horizon,
        increments=inc,
        mode_variances=path.mode_variances,
        seed=path.seed,
    )


PhiLike = Union[SpectralField, Callable[[float], np.ndarray]]


def _phi_at(phi: PhiLike, t: float, n_modes: int) -> np.ndarray:
    if isinstance(phi, SpectralField):
        c = phi.coeffs
    else:
        c = np.asarray(phi(t), dtype=np.float64)
    if c.shape != (n_modes,):
        raise GridMismatchError(
            "test function has %r coefficients, path has %d modes"
            % (c.shape, n_modes))
    return c


def stochastic_integral(path: NoisePath, phi: PhiLike) -> float:
    """Left-point (Ito) integral sum_j <phi(t_j), dW_j>.

    phi is a constant SpectralField or a callable t -> coefficient
    vector evaluated at the left endpoint of each step.
    """
    if isinstance(phi, SpectralField):
        c = _phi_at(phi, 0.0, path.n_modes)
        return float(c @ path.increments.sum(axis=1))
    total = 0.0
    dt = path.dt
    for j in range(path.n_steps):
        c = _phi_at(phi, j * dt, path.n_modes)
        total += float(c @ path.increments[:, j])
    return total


# Binary dump layout (all little-endian):
#   uint64 seed, uint64 N, uint64 J, float64 T,
#   N float64 mode variances b_k,
#   N*J float64 increments, row-major (mode k varies slowest).
_HEADER = struct.Struct("<QQQd")


def dump_path(path: NoisePath, fileobj) -> None:
    """Write the path in the documented little-endian binary layout.

    Accepts an open binary file object or a filesystem path.
    """
    if isinstance(fileobj, (str, os.PathLike)):
        with open(fileobj, "wb") as fh:
            dump_path(path, fh)
        return
    fileobj.write(_HEADER.pack(path.seed, path.n_modes, path.n_steps, path.horizon))
    fileobj.write(path.mode_variances.astype("<f8").tobytes())
    fileobj.write(np.ascontiguousarray(path.increments).astype("<f8").tobytes())


def load_path(fileobj) -> NoisePath:
    """Inverse of dump_path."""
    if isinstance(fileobj, (str, os.PathLike)):
        with open(fileobj, "rb") as fh:
            return load_path(fh)
    head = fileobj.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise ConfigurationError("truncated noise dump header")
    seed, n, j, horizon = _HEADER.unpack(head)
    b = np.frombuffer(fileobj.read(8 * n), dtype="<f8").copy()
    body = fileobj.read(8 * n * j)
    if len(body) != 8 * n * j:
        raise ConfigurationError("truncated noise dump body")
    inc = np.frombuffer(body, dtype="<f8").reshape(n, j).copy()
    return NoisePath(horizon=horizon, increments=inc, mode_variances=b, seed=seed)
