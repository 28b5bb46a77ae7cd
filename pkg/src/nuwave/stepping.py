"""Time-stepping loops, written once in numba-compilable numpy.

These are the hot kernels. nuwave.kernels wraps each of them with
numba.njit when the accelerated backend is active and re-exports them
unchanged for the pure-numpy fallback, so both backends execute the
same source.

Conventions shared by all loops:
  * per-mode coefficient vectors are float64 (N,), increments are (N, J);
  * nonlinear terms are evaluated pseudospectrally: samples = syn @ u,
    f applied pointwise, projection = ana @ f(samples);
  * forcing and noise are frozen over a step and integrated against the
    exact linear propagator, so step size never needs to resolve nu;
  * a return value of 0 means success, j > 0 means the state left the
    trusted range (|coeff| > 1e8 or non-finite) after step j.
"""

from __future__ import annotations

import numpy as np

BLOWUP_LIMIT = 1.0e8


def wave_loop(u, v, dw, m11, m12, m21, m22, iu, iv, syn, ana,
              c0, c1, c2, c3, inv_nu, noise_fac, sample_steps, out_u, out_v):
    n_modes = u.shape[0]
    n_steps = dw.shape[1]
    n_samples = sample_steps.shape[0]
    pos = 0
    if pos < n_samples and sample_steps[pos] == 0:
        out_u[pos, :] = u
        out_v[pos, :] = v
        pos += 1
    for j in range(n_steps):
        ph = np.dot(syn, u)
        fu = ((c3 * ph + c2) * ph + c1) * ph + c0
        g = np.dot(ana, fu)
        rhs = g * inv_nu + noise_fac * dw[:, j]
        un = m11 * u + m12 * v + iu * rhs
        vn = m21 * u + m22 * v + iv * rhs
        u = un
        v = vn
        for k in range(n_modes):
            if not np.isfinite(u[k]) or abs(u[k]) > BLOWUP_LIMIT \
                    or not np.isfinite(v[k]) or abs(v[k]) > BLOWUP_LIMIT:
                return j + 1
        if pos < n_samples and sample_steps[pos] == j + 1:
            out_u[pos, :] = u
            out_v[pos, :] = v
            pos += 1
    return 0


def heat_loop(u, dw, decay, gain, noise_gain, syn, ana,
              c0, c1, c2, c3, sample_steps, out_u):
    n_modes = u.shape[0]
    n_steps = dw.shape[1]
    n_samples = sample_steps.shape[0]
    pos = 0
    if pos < n_samples and sample_steps[pos] == 0:
        out_u[pos, :] = u
        pos += 1
    for j in range(n_steps):
        ph = np.dot(syn, u)
        fu = ((c3 * ph + c2) * ph + c1) * ph + c0
        g = np.dot(ana, fu)
        u = decay * u + gain * g + noise_gain * dw[:, j]
        for k in range(n_modes):
            if not np.isfinite(u[k]) or abs(u[k]) > BLOWUP_LIMIT:
                return j + 1
        if pos < n_samples and sample_steps[pos] == j + 1:
            out_u[pos, :] = u
            pos += 1
    return 0


def split_loop(u, v, v2, v3, dw, m11, m12, m21, m22, iu, iv, rho, cnoise,
               lam, syn, ana, c0, c1, c2, c3, inv_nu, noise_fac,
               out_u, out_v, out_v2, out_v3):
    # Full system plus the slaved components; every step is recorded.
    # v2 and v3 consume the state and increment of the step being taken,
    # evaluated at its left endpoint, like the full system does.
    n_modes = u.shape[0]
    n_steps = dw.shape[1]
    out_u[0, :] = u
    out_v[0, :] = v
    out_v2[0, :] = v2
    out_v3[0, :] = v3
    for j in range(n_steps):
        ph = np.dot(syn, u)
        fu = ((c3 * ph + c2) * ph + c1) * ph + c0
        g = np.dot(ana, fu)
        gfull = g - lam * u
        rhs = g * inv_nu + noise_fac * dw[:, j]
        un = m11 * u + m12 * v + iu * rhs
        vn = m21 * u + m22 * v + iv * rhs
        v2 = rho * v2 + (1.0 - rho) * gfull
        v3 = rho * v3 + cnoise * dw[:, j]
        u = un
        v = vn
        for k in range(n_modes):
            if not np.isfinite(u[k]) or abs(u[k]) > BLOWUP_LIMIT \
                    or not np.isfinite(v[k]) or abs(v[k]) > BLOWUP_LIMIT:
                return j + 1
        out_u[j + 1, :] = u
        out_v[j + 1, :] = v
        out_v2[j + 1, :] = v2
        out_v3[j + 1, :] = v3
    return 0


def v3_loop(v3, dw, rho, cnoise, sample_steps, out):
    n_steps = dw.shape[1]
    n_samples = sample_steps.shape[0]
    pos = 0
    if pos < n_samples and sample_steps[pos] == 0:
        out[pos, :] = v3
        pos += 1
    for j in range(n_steps):
        v3 = rho * v3 + cnoise * dw[:, j]
        if pos < n_samples and sample_steps[pos] == j + 1:
            out[pos, :] = v3
            pos += 1
    return 0
