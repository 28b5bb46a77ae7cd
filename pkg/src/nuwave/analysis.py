"""Weak-form bookkeeping, coupled errors, rate fits and ensembles.

The expansion audit decomposes the time-integrated weak form of the
full system against a separable test function phi(t, x) = g(t) phi(x)
into the terms

    lhs  = <u(t), phi(t)> - <u0, phi(0)> - int <u, phi_t>
           - int <u, Delta phi> - int <f(u), phi>
    rhs  = (1/nu) int <v1bar, phi>          (order nu)
           - nu <v2bar(t), phi(t)>          (order nu)
           + nu int <v2bar, phi_t>          (order nu)
           + nu^(alpha-1/2) int <v3bar, phi>

and reports the defect lhs - sum(rhs) together with the Ito column
nu^alpha int <phi, dW>, whose difference from the v3bar column scales
like nu^(alpha+1/2).

Two integrals need care because their integrands live on the nu
timescale. The v1bar column is evaluated in closed form (the kernel
e^(-s/nu) can decay inside a single step). The v3bar column integrates
the scheme's own piecewise-exponential interpolant exactly over each
step instead of sampling grid values, which keeps both the coupling to
the Ito column and the nu^(alpha+1/2) residual scaling intact when the
step size exceeds nu.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import Trajectory
from .errors import GridMismatchError
from .spectral import SpectralField

__all__ = [
    "TestFunction",
    "ErrorReport",
    "RateFit",
    "ExpansionAudit",
    "EnsembleStats",
    "weak_pairing",
    "expansion_audit",
    "reconstruction_defect",
    "sup_error",
    "rate_fit",
    "ensemble",
    "replica_seed",
]


@dataclass(frozen=True)
class TestFunction:
    """Separable test function g(t) * phi(x) with exact time calculus.

    time_tag "poly" with coeffs (c0, c1, ...) means g(t) = sum c_i t^i;
    time_tag "trig" with coeffs (a, b, omega) means
    g(t) = a cos(omega t) + b sin(omega t). Both admit closed forms for
    g, g' and int_0^t e^(-s/nu) g(s) ds.
    """

    spatial: SpectralField
    time_tag: str = "poly"
    time_coeffs: Tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.time_tag not in ("poly", "trig"):
            raise ValueError("time_tag must be 'poly' or 'trig', got %r"
                             % (self.time_tag,))
        if self.time_tag == "trig" and len(self.time_coeffs) != 3:
            raise ValueError("trig time factor needs coeffs (a, b, omega)")
        if self.time_tag == "poly" and len(self.time_coeffs) < 1:
            raise ValueError("poly time factor needs at least one coefficient")

    def g(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.time_tag == "poly":
            out = np.zeros_like(t)
            for c in reversed(self.time_coeffs):
                out = out * t + c
            return out
        a, b, omega = self.time_coeffs
        return a * np.cos(omega * t) + b * np.sin(omega * t)

    def g_prime(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.time_tag == "poly":
            out = np.zeros_like(t)
            n = len(self.time_coeffs)
            for i in range(n - 1, 0, -1):
                out = out * t + i * self.time_coeffs[i]
            return out
        a, b, omega = self.time_coeffs
        return -a * omega * np.sin(omega * t) + b * omega * np.cos(omega * t)

    def exp_weighted_integral(self, t, nu: float):
        """Closed form int_0^t e^(-s/nu) g(s) ds, elementwise in t."""
        t = np.asarray(t, dtype=np.float64)
        decay = np.exp(-t / nu)
        if self.time_tag == "poly":
            # I_n = int_0^t s^n e^(-s/nu) ds = -nu t^n e^(-t/nu) + n nu I_(n-1)
            i_n = nu * (1.0 - decay)
            total = self.time_coeffs[0] * i_n
            for n in range(1, len(self.time_coeffs)):
                i_n = -nu * t ** n * decay + n * nu * i_n
                total = total + self.time_coeffs[n] * i_n
            return total
        a, b, omega = self.time_coeffs
        r = 1.0 / nu
        den = r * r + omega * omega
        cos_part = (r + decay * (omega * np.sin(omega * t)
                                 - r * np.cos(omega * t))) / den
        sin_part = (omega - decay * (r * np.sin(omega * t)
                                     + omega * np.cos(omega * t))) / den
        return a * cos_part + b * sin_part


@dataclass(frozen=True)
class ErrorReport:
    """Per-time L2 errors between two coupled trajectories."""

    times: np.ndarray
    errors: np.ndarray
    sup_error: float
    nu: Optional[float] = None
    alpha: Optional[float] = None
    seed: Optional[int] = None


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(error) against log(nu)."""

    slope: float
    intercept: float
    r_squared: float
    n_points: int


@dataclass(frozen=True)
class EnsembleStats:
    values: np.ndarray
    seeds: Tuple[int, ...]
    mean: np.ndarray
    stderr: np.ndarray


@dataclass(eq=False)
class ExpansionAudit:
    """Term table of the weak-form expansion at every grid time."""

    times: np.ndarray
    lhs: np.ndarray
    v1_term: np.ndarray
    v2_boundary: np.ndarray
    v2_time: np.ndarray
    v3_term: np.ndarray
    ito_term: np.ndarray
    defect: np.ndarray
    v3_residual: np.ndarray

    COLUMNS = ("lhs", "v1_term", "v2_boundary", "v2_time", "v3_term",
               "ito_term", "defect", "v3_residual")

    def sup_abs(self, column: str) -> float:
        return float(np.max(np.abs(getattr(self, column))))


def weak_pairing(traj: Trajectory, phi: TestFunction, t: float) -> float:
    """<u(t), phi(t)> = g(t) * sum_k u_k(t) phi_k at a stored sample time."""
    traj.basis.require_same(phi.spatial.basis)
    idx = np.flatnonzero(np.abs(traj.times - t) <= 1e-12 * max(1.0, abs(t)))
    if idx.size == 0:
        raise GridMismatchError(
            "t = %r is not a stored sample time of the trajectory" % (t,))
    row = int(idx[0])
    return float(phi.g(t)) * float(traj.u[row] @ phi.spatial.coeffs)


def _cumtrapz(y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty(y.shape[0])
    out[0] = 0.0
    np.cumsum(0.5 * h * (y[1:] + y[:-1]), out=out[1:])
    return out


def _cumsum0(y: np.ndarray) -> np.ndarray:
    out = np.empty(y.shape[0] + 1)
    out[0] = 0.0
    np.cumsum(y, out=out[1:])
    return out


def expansion_audit(run: Trajectory, phi: TestFunction) -> ExpansionAudit:
    """Build the weak-expansion term table for a run_split trajectory."""
    if run.v2 is None or run.v3 is None or run.v1 is None:
        raise ValueError("expansion_audit needs a run_split trajectory "
                         "with split components")
    if run.params is None or run.noise is None:
        raise ValueError("trajectory carries no params/noise provenance")
    run.basis.require_same(phi.spatial.basis)
    params = run.params
    nu, alpha, h = params.nu, params.alpha, params.dt
    times = run.times
    lam = run.basis.eigenvalues
    pc = phi.spatial.coeffs
    g = phi.g(times)
    gp = phi.g_prime(times)

    pu = run.u @ pc
    p_lap = run.u @ (-(lam * pc))
    samples = run.u @ run.basis.synthesis.T
    f_samples = params.nonlinearity(samples)
    pf = (f_samples @ run.basis.analysis.T) @ pc
    pv2 = run.v2 @ pc
    pv3 = run.v3 @ pc

    lhs = (pu * g - pu[0] * g[0] - _cumtrapz(pu * gp, h)
           - _cumtrapz(p_lap * g, h) - _cumtrapz(pf * g, h))

    u1 = run.v1[0] / nu  # v1bar(0) = nu * u1
    v1_term = float(u1 @ pc) * phi.exp_weighted_integral(times, nu)
    v2_boundary = -nu * pv2 * g
    v2_time = nu * _cumtrapz(pv2 * gp, h)

    p_dw = pc @ run.noise.increments
    g_left = g[:-1]
    ito_term = nu ** alpha * _cumsum0(g_left * p_dw)

    # Integrating the OU equation over one step gives the identity
    #   int_j v3bar ds = nu*(V_j - V_{j+1}) + sqrt(nu)*dW_j
    # exactly, so the residual against the Ito sum is an Abel sum of
    # O(nu) terms whatever the ratio of step size to nu.
    v3_term = nu ** (alpha - 0.5) * _cumsum0(
        g_left * (nu * (pv3[:-1] - pv3[1:]) + math.sqrt(nu) * p_dw))

    defect = lhs - v1_term - v2_boundary - v2_time - v3_term
    return ExpansionAudit(
        times=times, lhs=lhs, v1_term=v1_term, v2_boundary=v2_boundary,
        v2_time=v2_time, v3_term=v3_term, ito_term=ito_term, defect=defect,
        v3_residual=v3_term - ito_term)


def reconstruction_defect(run: Trajectory) -> ErrorReport:
    """Per-time L2 norm of nu*v - v1bar - nu*v2bar - nu^(alpha+1/2)*v3bar."""
    if run.v is None or run.v1 is None or run.v2 is None or run.v3 is None:
        raise ValueError("reconstruction_defect needs a run_split trajectory")
    params = run.params
    nu, alpha = params.nu, params.alpha
    resid = nu * run.v - run.v1 - nu * run.v2 - nu ** (alpha + 0.5) * run.v3
    errors = np.sqrt(np.sum(resid ** 2, axis=1))
    return ErrorReport(times=run.times, errors=errors,
                       sup_error=float(np.max(errors)),
                       nu=nu, alpha=alpha, seed=run.meta.get("seed"))


def sup_error(a: Trajectory, b: Trajectory) -> ErrorReport:
    """Pathwise L2 displacement error at shared sample times, plus its sup."""
    a.basis.require_same(b.basis)
    if a.times.shape != b.times.shape or np.any(np.abs(a.times - b.times) > 1e-12):
        raise GridMismatchError("trajectories sampled at different times")
    diff = a.u - b.u
    errors = np.sqrt(np.sum(diff ** 2, axis=1))
    return ErrorReport(
        times=a.times.copy(), errors=errors, sup_error=float(np.max(errors)),
        nu=a.meta.get("nu"), alpha=a.meta.get("alpha"), seed=a.meta.get("seed"))


PointsLike = Sequence[Tuple[float, float]]


def rate_fit(points: PointsLike) -> RateFit:
    """Fit log(error) = slope * log(nu) + intercept by least squares.

    Requires at least three points with distinct nu. Non-positive error
    values are rejected: they indicate the measurement fell below the
    floating-point noise floor and cannot enter a log fit.
    """
    pts = [(float(nu), float(err)) for nu, err in points]
    if len(pts) < 3:
        raise ValueError("rate_fit needs at least 3 points, got %d" % len(pts))
    nus = np.array([p[0] for p in pts])
    errs = np.array([p[1] for p in pts])
    if np.any(nus <= 0) or len(set(nus.tolist())) < len(pts):
        raise ValueError("nu values must be positive and distinct")
    if np.any(errs <= 0):
        raise ValueError(
            "error values must be positive for a log-log fit; "
            "non-positive entries are below the noise floor")
    x = np.log(nus)
    y = np.log(errs)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept),
                   r_squared=r2, n_points=len(pts))


def replica_seed(base_seed: int, replica: int) -> int:
    """Deterministic per-replica seed, independent of evaluation order."""
    ss = np.random.SeedSequence((int(base_seed), int(replica)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def ensemble(fn: Callable[[int, int], Union[float, np.ndarray]],
             n_replicas: int, base_seed: int, threads: int = 1) -> EnsembleStats:
    """Run fn(replica_index, seed) over deterministically derived seeds.

    Results are reduced in replica order regardless of execution order,
    so threaded and sequential runs agree. Requires n_replicas >= 2 for
    a meaningful standard error.
    """
    if n_replicas < 2:
        raise ValueError("ensemble needs at least 2 replicas, got %d" % n_replicas)
    seeds = tuple(replica_seed(base_seed, r) for r in range(n_replicas))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, range(n_replicas), seeds))
    else:
        results = [fn(r, s) for r, s in zip(range(n_replicas), seeds)]
    values = np.array(results, dtype=np.float64)
    mean = values.mean(axis=0)
    stderr = values.std(axis=0, ddof=1) / math.sqrt(n_replicas)
    return EnsembleStats(values=values, seeds=seeds, mean=mean, stderr=stderr)
