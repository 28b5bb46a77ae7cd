"""Dirichlet sine basis on an interval, spectral fields and nonlinearities.

The basis functions are e_k(x) = sqrt(2/L) * sin(k*pi*x/L) for k = 1..N,
eigenfunctions of the negative Dirichlet Laplacian with eigenvalues
lam_k = (k*pi/L)^2. Physical-space work happens on the interior uniform
grid x_m = m*L/(M+1), m = 1..M, where the discrete sine orthogonality

    sum_m sin(j*pi*m/(M+1)) * sin(k*pi*m/(M+1)) = (M+1)/2 * delta_jk

holds exactly for 1 <= j, k <= M. Transforms are therefore exact (up to
rounding) for any field supported on modes <= M, and a grid with
M >= 2N de-aliases cubic products of modes <= N: the first alias source
is mode 2(M+1) - j >= N + 2 for j <= 3N.

All containers are frozen; operations return new objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigurationError, GridMismatchError

__all__ = [
    "SpectralBasis",
    "SpectralField",
    "Nonlinearity",
    "make_basis",
    "to_physical",
    "from_physical",
    "apply_nonlinearity",
    "sobolev_norm",
    "inner_l2",
]


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Sine basis with N retained modes and an M-point dealiased grid.

    Attributes:
        length: interval length L > 0.
        n_modes: number of retained modes N.
        n_nodes: number of interior grid nodes M (default 2N).
        eigenvalues: (N,) Laplacian eigenvalues (k*pi/L)^2, strictly increasing.
        nodes: (M,) interior grid points m*L/(M+1).
        synthesis: (M, N) matrix mapping coefficients to node samples.
        analysis: (N, M) matrix mapping node samples to coefficients.
        weight: quadrature weight L/(M+1) for the node grid.
    """

    length: float
    n_modes: int
    n_nodes: int
    eigenvalues: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    synthesis: np.ndarray = field(repr=False)
    analysis: np.ndarray = field(repr=False)
    weight: float

    def matches(self, other: "SpectralBasis") -> bool:
        return (
            self.length == other.length
            and self.n_modes == other.n_modes
            and self.n_nodes == other.n_nodes
        )

    def require_same(self, other: "SpectralBasis") -> None:
        if not self.matches(other):
            raise GridMismatchError(
                "basis mismatch: (L=%r, N=%d, M=%d) vs (L=%r, N=%d, M=%d)"
                % (self.length, self.n_modes, self.n_nodes,
                   other.length, other.n_modes, other.n_nodes)
            )


def make_basis(length: float, n_modes: int, n_nodes: Optional[int] = None) -> SpectralBasis:
    """Build the sine basis for an interval of the given length.

    Args:
        length: interval length L, must be positive and finite.
        n_modes: retained mode count N >= 1.
        n_nodes: grid size M; defaults to 2N (cubic-dealiased).

    Raises:
        ConfigurationError: for non-positive length, N < 1, or M < N.
    """
    problems = []
    if not np.isfinite(length) or length <= 0:
        problems.append("length must be positive and finite, got %r" % (length,))
    if n_modes < 1:
        problems.append("n_modes must be >= 1, got %d" % n_modes)
    if n_nodes is None:
        n_nodes = 2 * max(n_modes, 1)
    if n_nodes < n_modes:
        problems.append("n_nodes must be >= n_modes, got %d < %d" % (n_nodes, n_modes))
    if problems:
        raise ConfigurationError(problems)

    length = float(length)
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    eigenvalues = (k * np.pi / length) ** 2
    m = np.arange(1, n_nodes + 1, dtype=np.float64)
    nodes = m * length / (n_nodes + 1)
    # synthesis[m, k] = sqrt(2/L) sin((k+1) pi (m+1) / (M+1)) in 0-based indices
    angles = np.outer(m, k) * (np.pi / (n_nodes + 1))
    synthesis = np.ascontiguousarray(np.sqrt(2.0 / length) * np.sin(angles))
    weight = length / (n_nodes + 1)
    analysis = np.ascontiguousarray(weight * synthesis.T)
    return SpectralBasis(
        length=length,
        n_modes=int(n_modes),
        n_nodes=int(n_nodes),
        eigenvalues=eigenvalues,
        nodes=nodes,
        synthesis=synthesis,
        analysis=analysis,
        weight=weight,
    )


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A function on (0, L) represented by its sine coefficients."""

    coeffs: np.ndarray
    basis: SpectralBasis

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 1 or coeffs.shape[0] != self.basis.n_modes:
            raise GridMismatchError(
                "coefficient vector has shape %r, basis has %d modes"
                % (coeffs.shape, self.basis.n_modes)
            )
        object.__setattr__(self, "coeffs", coeffs)


def zero_field(basis: SpectralBasis) -> SpectralField:
    return SpectralField(np.zeros(basis.n_modes), basis)


def unit_mode(basis: SpectralBasis, mode: int, amplitude: float = 1.0) -> SpectralField:
    """Field amplitude * e_mode (1-based mode index)."""
    if not 1 <= mode <= basis.n_modes:
        raise ConfigurationError(
            "mode %d out of range 1..%d" % (mode, basis.n_modes))
    c = np.zeros(basis.n_modes)
    c[mode - 1] = amplitude
    return SpectralField(c, basis)


def to_physical(u: SpectralField) -> np.ndarray:
    """Sample the field at the basis grid nodes."""
    return u.basis.synthesis @ u.coeffs


def from_physical(samples: np.ndarray, basis: SpectralBasis) -> SpectralField:
    """Project node samples onto the retained modes.

    Exact inverse of to_physical for fields supported on modes <= M.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape != (basis.n_nodes,):
        raise GridMismatchError(
            "sample vector has shape %r, grid has %d nodes"
            % (samples.shape, basis.n_nodes)
        )
    return SpectralField(basis.analysis @ samples, basis)


def sobolev_norm(u: SpectralField, order: float = 0.0) -> float:
    """H^s norm (sum_k lam_k^s a_k^2)^(1/2); s = 0 is the L2 norm."""
    lam = u.basis.eigenvalues
    return float(np.sqrt(np.sum(lam ** order * u.coeffs ** 2)))


def inner_l2(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product via coefficient contraction."""
    u.basis.require_same(v.basis)
    return float(np.dot(u.coeffs, v.coeffs))


@dataclass(frozen=True)
class Nonlinearity:
    """Pointwise polynomial reaction term f(s) of degree <= 3.

    coeffs are (c0, c1, c2, c3) for f(s) = c0 + c1 s + c2 s^2 + c3 s^3.
    """

    tag: str
    coeffs: Tuple[float, float, float, float]

    @staticmethod
    def cubic_default() -> "Nonlinearity":
        """The double-well drift f(s) = s - s^3."""
        return Nonlinearity("cubic_default", (0.0, 1.0, 0.0, -1.0))

    @staticmethod
    def polynomial(coeffs) -> "Nonlinearity":
        coeffs = [float(c) for c in coeffs]
        if len(coeffs) > 4:
            raise ConfigurationError(
                "nonlinearity degree must be <= 3, got %d coefficients" % len(coeffs))
        while len(coeffs) < 4:
            coeffs.append(0.0)
        return Nonlinearity("poly", tuple(coeffs))

    def __call__(self, s: np.ndarray) -> np.ndarray:
        c0, c1, c2, c3 = self.coeffs
        return ((c3 * s + c2) * s + c1) * s + c0

    def antiderivative(self, s: np.ndarray) -> np.ndarray:
        """F(s) = integral of f from 0 to s."""
        c0, c1, c2, c3 = self.coeffs
        return (((c3 / 4.0 * s + c2 / 3.0) * s + c1 / 2.0) * s + c0) * s


def apply_nonlinearity(f: Nonlinearity, u: SpectralField) -> SpectralField:
    """Project f(u(x)) onto the retained modes via the dealiased grid.

    The projection is the grid quadrature; it is exact for odd-power
    content (products of <= 3 sine modes) whenever M >= 2N.
    """
    ph = to_physical(u)
    return SpectralField(u.basis.analysis @ f(ph), u.basis)
