"""Integrators for the damped stochastic wave system and its limit models.

The full system, per sine mode k with eigenvalue lam_k, is

    du_k = v_k dt
    dv_k = (1/nu) * (-v_k - lam_k u_k + f_k(u)) dt + nu^(alpha-1) dW_k,

with nu in (0, 1] and noise exponent alpha >= 0, alpha != 1. All
integrators are mode-diagonal stochastic exponential Euler schemes: the
linear part is advanced by its exact propagator, while the nonlinear
projection f_k(u) and the step's noise increment are frozen over the
step and integrated exactly against that propagator. Step size dt is
therefore chosen for accuracy of the slow dynamics only and never needs
to resolve the 1/nu timescale.

The velocity splitting tracks three components on the same grid and
noise: v1bar (free decay of the initial velocity, closed form), v2bar
(relaxation to the elastic plus reaction forcing) and v3bar (an
Ornstein-Uhlenbeck process driven by the shared increments with exact
per-step variance). The scaled velocity satisfies
nu*v = v1bar + nu*v2bar + nu^(alpha+1/2)*v3bar up to O(dt) defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import BlowUpError, ConfigurationError, GridMismatchError
from .noise import CovarianceSpectrum, NoisePath
from .spectral import (Nonlinearity, SpectralBasis, SpectralField,
                       apply_nonlinearity, sobolev_norm, to_physical)

__all__ = [
    "ModelParams",
    "WaveState",
    "SplitState",
    "Trajectory",
    "wave_propagator",
    "heat_propagator",
    "step_full_wave",
    "simulate_full",
    "evolve_v1",
    "step_v2",
    "step_v3",
    "simulate_heat",
    "simulate_det_wave",
    "run_split",
    "wave_energy",
]

# Branch switch for the overdamped propagator: above this value of
# 2*omega*h the slow-root exponential alone is exact to ~1e-87.
_EXP_SPLIT = 200.0


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Problem definition shared by all integrators."""

    nu: float
    alpha: float
    horizon: float
    dt: float
    basis: SpectralBasis
    nonlinearity: Nonlinearity
    spectrum: CovarianceSpectrum

    def __post_init__(self):
        problems = []
        if not (0.0 < self.nu <= 1.0):
            problems.append("nu must lie in (0, 1], got %r" % (self.nu,))
        if not (self.alpha >= 0.0):
            problems.append("alpha must be >= 0, got %r" % (self.alpha,))
        if self.alpha == 1.0:
            problems.append(
                "alpha = 1 is unsupported: it sits on the boundary between "
                "the two limit regimes and neither reduced model applies")
        if not (self.horizon > 0.0):
            problems.append("horizon must be positive, got %r" % (self.horizon,))
        if not (0.0 < self.dt <= self.horizon):
            problems.append("dt must lie in (0, horizon], got %r" % (self.dt,))
        else:
            n = round(self.horizon / self.dt)
            if n < 1 or abs(n * self.dt - self.horizon) > 1e-9 * self.horizon:
                problems.append(
                    "dt = %r must divide horizon = %r into whole steps"
                    % (self.dt, self.horizon))
        if self.spectrum.n_modes != self.basis.n_modes:
            problems.append(
                "spectrum has %d modes, basis has %d"
                % (self.spectrum.n_modes, self.basis.n_modes))
        if problems:
            raise ConfigurationError(problems)

    @property
    def n_steps(self) -> int:
        return round(self.horizon / self.dt)


@dataclass(frozen=True)
class WaveState:
    """Displacement and velocity at one time."""

    u: SpectralField
    v: SpectralField
    t: float


@dataclass(frozen=True)
class SplitState:
    """The three velocity-splitting components at one time."""

    v1: SpectralField
    v2: SpectralField
    v3: SpectralField
    t: float


@dataclass(eq=False)
class Trajectory:
    """Sampled trajectory; rows of each array correspond to times."""

    times: np.ndarray
    u: np.ndarray
    basis: SpectralBasis
    v: Optional[np.ndarray] = None
    v1: Optional[np.ndarray] = None
    v2: Optional[np.ndarray] = None
    v3: Optional[np.ndarray] = None
    u_split: Optional[np.ndarray] = None
    params: Optional[ModelParams] = None
    noise: Optional[NoisePath] = None
    meta: dict = field(default_factory=dict)

    def field_at(self, index: int) -> SpectralField:
        return SpectralField(self.u[index], self.basis)


def wave_propagator(lam, nu: float, h: float):
    """Exact step-h propagator data for the per-mode 2x2 system
    [[0, 1], [-lam/nu, -1/nu]].

    Returns (m11, m12, m21, m22, iu, iv): the matrix exponential entries
    and the integrated second column iu = int_0^h (e^(sA))_12 ds,
    iv = int_0^h (e^(sA))_22 ds used for frozen forcing and noise.

    Writing A = -1/(2 nu) I + B with B^2 = (1 - 4 nu lam)/(4 nu^2) I,
    the exponential is exp(-h/(2 nu)) (C I + S B) with C, S the matched
    cosh/sinh or cos/sin pair. Both branches are evaluated in forms that
    never overflow: every exponent that appears is <= 0.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if not (nu > 0 and h > 0):
        raise ConfigurationError("nu and h must be positive")
    half = h / (2.0 * nu)
    delta = 1.0 - 4.0 * nu * lam

    # overdamped / critically damped branch (delta >= 0)
    om_d = np.sqrt(np.where(delta > 0, delta, 0.0)) / (2.0 * nu)
    x = 2.0 * om_d * h
    ea = np.exp(h * om_d - half)
    eb = np.exp(-(h * om_d + half))
    ec_d = 0.5 * (ea + eb)
    xs = np.where(x > 0, x, 1.0)
    # beyond the split the eb-weighted form is replaced below, so clamp the
    # expm1 argument to keep the dead branch from overflowing
    xc = np.minimum(x, _EXP_SPLIT)
    es_d = np.where(x > 0, eb * h * np.expm1(xc) / xs, eb * h)
    es_d = np.where(x > _EXP_SPLIT, ea * h / xs, es_d)

    # oscillatory branch (delta < 0)
    om_o = np.sqrt(np.where(delta < 0, -delta, 1.0)) / (2.0 * nu)
    eh = math.exp(-half)
    ec_o = eh * np.cos(om_o * h)
    es_o = eh * np.sin(om_o * h) / om_o

    osc = delta < 0
    ec = np.where(osc, ec_o, ec_d)
    es = np.where(osc, es_o, es_d)

    m11 = ec + es / (2.0 * nu)
    m12 = es
    m21 = -lam * es / nu
    m22 = ec - es / (2.0 * nu)
    iu = -(m12 + nu * (m22 - 1.0)) / lam
    iv = m12
    return (np.ascontiguousarray(m11), np.ascontiguousarray(m12),
            np.ascontiguousarray(m21), np.ascontiguousarray(m22),
            np.ascontiguousarray(iu), np.ascontiguousarray(iv))


def heat_propagator(lam, h: float):
    """Per-mode heat factors: decay e^(-lam h), forcing gain
    (1 - e^(-lam h))/lam, and the relative noise response
    (1 - e^(-lam h))/(lam h) for a constant-rate increment."""
    lam = np.asarray(lam, dtype=np.float64)
    em = -np.expm1(-lam * h)
    decay = np.exp(-lam * h)
    gain = em / lam
    noise_rel = em / (lam * h)
    return (np.ascontiguousarray(decay), np.ascontiguousarray(gain),
            np.ascontiguousarray(noise_rel))


def _ou_factors(nu: float, h: float):
    """Decay e^(-h/nu) and increment coefficient c with
    c^2 * b_k * h = b_k (1 - e^(-2h/nu))/2, the exact one-step variance."""
    rho = math.exp(-h / nu)
    c = math.sqrt(-math.expm1(-2.0 * h / nu) / (2.0 * h))
    return rho, c


def _check_initial(params: ModelParams, *fields_: SpectralField) -> None:
    for f in fields_:
        params.basis.require_same(f.basis)


def _check_noise(params: ModelParams, noise: NoisePath) -> None:
    if noise.n_modes != params.basis.n_modes:
        raise GridMismatchError(
            "noise has %d modes, basis has %d"
            % (noise.n_modes, params.basis.n_modes))
    if noise.n_steps != params.n_steps or \
            abs(noise.horizon - params.horizon) > 1e-9 * params.horizon:
        raise GridMismatchError(
            "noise grid (T=%r, J=%d) does not match params (T=%r, J=%d); "
            "use coarsen() to align"
            % (noise.horizon, noise.n_steps, params.horizon, params.n_steps))


def _sample_steps(params: ModelParams, sample_times) -> np.ndarray:
    n = params.n_steps
    if sample_times is None:
        return np.arange(n + 1, dtype=np.int64)
    t = np.atleast_1d(np.asarray(sample_times, dtype=np.float64))
    idx = np.rint(t / params.dt).astype(np.int64)
    if np.any(idx < 0) or np.any(idx > n) or \
            np.any(np.abs(idx * params.dt - t) > 1e-9 * max(1.0, params.horizon)):
        raise GridMismatchError(
            "sample times must lie on the integrator grid within 1e-9")
    if np.any(np.diff(idx) <= 0):
        raise GridMismatchError("sample times must be strictly increasing")
    return idx


def _zero_path(params: ModelParams) -> NoisePath:
    n, j = params.basis.n_modes, params.n_steps
    return NoisePath(
        horizon=params.horizon,
        increments=np.zeros((n, j)),
        mode_variances=np.zeros(n),
        seed=0,
    )


def _raise_blowup(status: int, params: ModelParams, seed, model: str):
    t = status * params.dt
    raise BlowUpError(
        "%s trajectory left the trusted range at step %d (t = %g, nu = %g)"
        % (model, status, t, params.nu),
        step=status, time=t, nu=params.nu, seed=seed)


def simulate_full(params: ModelParams, noise: NoisePath, u0: SpectralField,
                  u1: SpectralField, sample_times=None) -> Trajectory:
    """Integrate the full damped wave system along the given noise path."""
    _check_initial(params, u0, u1)
    _check_noise(params, noise)
    steps = _sample_steps(params, sample_times)
    basis = params.basis
    m11, m12, m21, m22, iu, iv = wave_propagator(basis.eigenvalues, params.nu, params.dt)
    c0, c1, c2, c3 = params.nonlinearity.coeffs
    noise_fac = params.nu ** (params.alpha - 1.0) / params.dt
    out_u = np.empty((steps.shape[0], basis.n_modes))
    out_v = np.empty_like(out_u)
    status = kernels.wave_loop(
        u0.coeffs.copy(), u1.coeffs.copy(), noise.increments,
        m11, m12, m21, m22, iu, iv, basis.synthesis, basis.analysis,
        c0, c1, c2, c3, 1.0 / params.nu, noise_fac, steps, out_u, out_v)
    if status:
        _raise_blowup(status, params, noise.seed, "full wave")
    return Trajectory(
        times=steps * params.dt, u=out_u, v=out_v, basis=basis, params=params,
        meta={"model": "full_wave", "nu": params.nu, "alpha": params.alpha,
              "seed": noise.seed, "increments_consumed": noise.n_steps,
              "backend": kernels.BACKEND})


def step_full_wave(state: WaveState, params: ModelParams, dw: np.ndarray,
                   h: float) -> WaveState:
    """One exponential-Euler step of the full system.

    dw holds this step's per-mode increments; h must equal the grid step
    the increments were sampled on.
    """
    _check_initial(params, state.u, state.v)
    dw = np.asarray(dw, dtype=np.float64)
    if dw.shape != (params.basis.n_modes,):
        raise GridMismatchError("dw must have one increment per mode")
    lam = params.basis.eigenvalues
    m11, m12, m21, m22, iu, iv = wave_propagator(lam, params.nu, h)
    g = apply_nonlinearity(params.nonlinearity, state.u).coeffs
    rhs = g / params.nu + params.nu ** (params.alpha - 1.0) / h * dw
    un = m11 * state.u.coeffs + m12 * state.v.coeffs + iu * rhs
    vn = m21 * state.u.coeffs + m22 * state.v.coeffs + iv * rhs
    return WaveState(SpectralField(un, params.basis),
                     SpectralField(vn, params.basis), state.t + h)


def evolve_v1(params: ModelParams, u1: SpectralField, t: float) -> SpectralField:
    """Closed form nu * e^(-t/nu) * u1; underflows cleanly to zero."""
    _check_initial(params, u1)
    if t < 0:
        raise ConfigurationError("t must be >= 0, got %r" % (t,))
    decay = math.exp(-t / params.nu)  # underflows cleanly to 0 for t >> nu
    return SpectralField(params.nu * decay * u1.coeffs, params.basis)


def step_v2(v2bar: SpectralField, u: SpectralField, params: ModelParams,
            h: float) -> SpectralField:
    """Relaxation step v2 <- e^(-h/nu) v2 + (1 - e^(-h/nu)) (f_k(u) - lam u),
    with the forcing frozen at the step's left endpoint."""
    _check_initial(params, v2bar, u)
    g = apply_nonlinearity(params.nonlinearity, u).coeffs \
        - params.basis.eigenvalues * u.coeffs
    rho = math.exp(-h / params.nu)
    return SpectralField(rho * v2bar.coeffs + (1.0 - rho) * g, params.basis)


def step_v3(v3bar: SpectralField, params: ModelParams, dw: np.ndarray,
            h: float) -> SpectralField:
    """Exact Ornstein-Uhlenbeck update driven by the shared increment.

    v3 <- e^(-h/nu) v3 + c(h, nu) dW with c chosen so the one-step noise
    variance is exactly b_k (1 - e^(-2h/nu))/2, preserving both the
    stationary law and the pathwise coupling to the other models.
    """
    _check_initial(params, v3bar)
    dw = np.asarray(dw, dtype=np.float64)
    if dw.shape != (params.basis.n_modes,):
        raise GridMismatchError("dw must have one increment per mode")
    rho, c = _ou_factors(params.nu, h)
    return SpectralField(rho * v3bar.coeffs + c * dw, params.basis)


def simulate_heat(params: ModelParams, noise: NoisePath, u0: SpectralField,
                  sample_times=None) -> Trajectory:
    """Integrate the reaction-diffusion limit model
    du = (Delta u + f(u)) dt + nu^alpha dW along the same noise path.

    The noise response per step is nu^alpha (1-e^(-lam h))/(lam h) dW_k,
    the increment treated as constant-rate forcing against the heat
    semigroup. This matches the nu -> 0 limit of the full-wave scheme's
    response exactly, so coupled differences measure the model gap.
    """
    _check_initial(params, u0)
    _check_noise(params, noise)
    steps = _sample_steps(params, sample_times)
    basis = params.basis
    decay, gain, noise_rel = heat_propagator(basis.eigenvalues, params.dt)
    c0, c1, c2, c3 = params.nonlinearity.coeffs
    noise_gain = params.nu ** params.alpha * noise_rel
    out_u = np.empty((steps.shape[0], basis.n_modes))
    status = kernels.heat_loop(
        u0.coeffs.copy(), noise.increments, decay, gain, noise_gain,
        basis.synthesis, basis.analysis, c0, c1, c2, c3, steps, out_u)
    if status:
        _raise_blowup(status, params, noise.seed, "heat")
    return Trajectory(
        times=steps * params.dt, u=out_u, basis=basis, params=params,
        meta={"model": "heat", "nu": params.nu, "alpha": params.alpha,
              "seed": noise.seed, "increments_consumed": noise.n_steps,
              "backend": kernels.BACKEND})


def simulate_det_wave(params: ModelParams, u0: SpectralField, u1: SpectralField,
                      sample_times=None) -> Trajectory:
    """Integrate the noiseless damped wave limit model. Shares the code
    path of simulate_full with a zero noise path, bit for bit."""
    traj = simulate_full(params, _zero_path(params), u0, u1, sample_times)
    traj.meta["model"] = "det_wave"
    return traj


def run_split(params: ModelParams, noise: NoisePath, u0: SpectralField,
              u1: SpectralField) -> Trajectory:
    """Advance the full system and all three splitting components on one
    grid and one noise path, recording every step.

    Returns a Trajectory with u, v, v1, v2, v3 and u_split, where
    u_split integrates the split velocity (1/nu) v1 + v2
    + nu^(alpha-1/2) v3: the v1 piece exactly, the others frozen at step
    left endpoints.
    """
    _check_initial(params, u0, u1)
    _check_noise(params, noise)
    basis = params.basis
    nu, h = params.nu, params.dt
    n_steps = params.n_steps
    lam = basis.eigenvalues
    m11, m12, m21, m22, iu, iv = wave_propagator(lam, nu, h)
    rho, cnoise = _ou_factors(nu, h)
    c0, c1, c2, c3 = params.nonlinearity.coeffs
    noise_fac = nu ** (params.alpha - 1.0) / h
    shape = (n_steps + 1, basis.n_modes)
    out_u = np.empty(shape)
    out_v = np.empty(shape)
    out_v2 = np.empty(shape)
    out_v3 = np.empty(shape)
    status = kernels.split_loop(
        u0.coeffs.copy(), u1.coeffs.copy(),
        np.zeros(basis.n_modes), np.zeros(basis.n_modes),
        noise.increments, m11, m12, m21, m22, iu, iv, rho, cnoise, lam,
        basis.synthesis, basis.analysis, c0, c1, c2, c3,
        1.0 / nu, noise_fac, out_u, out_v, out_v2, out_v3)
    if status:
        _raise_blowup(status, params, noise.seed, "split")
    times = np.arange(n_steps + 1) * h
    expdec = np.exp(-times / nu)  # underflows cleanly to 0 for t >> nu
    v1 = nu * np.outer(expdec, u1.coeffs)
    # displacement from the split velocity: exact for the v1 piece,
    # left-point for the others
    dv1 = np.outer(expdec[:-1] - expdec[1:], nu * u1.coeffs)
    drest = h * (out_v2[:-1] + nu ** (params.alpha - 0.5) * out_v3[:-1])
    u_split = np.empty(shape)
    u_split[0] = u0.coeffs
    np.cumsum(dv1 + drest, axis=0, out=u_split[1:])
    u_split[1:] += u0.coeffs
    return Trajectory(
        times=times, u=out_u, v=out_v, v1=v1, v2=out_v2, v3=out_v3,
        u_split=u_split, basis=basis, params=params, noise=noise,
        meta={"model": "split", "nu": nu, "alpha": params.alpha,
              "seed": noise.seed, "increments_consumed": noise.n_steps,
              "backend": kernels.BACKEND})


def wave_energy(u: SpectralField, v: SpectralField, params: ModelParams) -> float:
    """Diagnostic energy nu/2 ||v||^2 + 1/2 ||u||_1^2 - int F(u) with the
    potential integrated by grid quadrature."""
    _check_initial(params, u, v)
    kinetic = 0.5 * params.nu * sobolev_norm(v, 0.0) ** 2
    elastic = 0.5 * sobolev_norm(u, 1.0) ** 2
    potential = params.basis.weight * float(
        np.sum(params.nonlinearity.antiderivative(to_physical(u))))
    return kinetic + elastic - potential
