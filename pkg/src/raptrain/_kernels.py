"""Compiled inner loops: envelope evaluation and fixed-step RK4.

All Hamiltonians handled here share one "star" structure: a ground state
coupled to M excited levels, with

    H[j, j] = diag_const[j] + diag_rate[j] * t
    H[j, 0] = -0.5 * g[j] * peak * env((t - start) / duration)
              * exp(i * (phase_const[j] + phase_rate[j] * t + phase_curv * t**2))

for j = 1..M (arrays are indexed from 0 for level 1). Both the field frame
(time-dependent diagonal) and the phase-factor frames are special cases.
"""

import math

import numba as nb
import numpy as np

BLACKMAN = 0
GAUSSIAN = 1
TABLE = 2

# truncation of the Gaussian envelope, in standard deviations on each side
GAUSS_HALF_WIDTH = 3.0


@nb.njit(cache=True, nogil=True)
def envelope_unit(kind, u, xs, ys):
    """Normalized envelope at fractional time ``u`` (support [0, 1])."""
    if u < 0.0 or u > 1.0:
        return 0.0
    if kind == BLACKMAN:
        v = 0.42 - 0.5 * math.cos(2.0 * math.pi * u) + 0.08 * math.cos(4.0 * math.pi * u)
        # rounding leaves ~1e-17 negatives at the edges
        return v if v > 0.0 else 0.0
    if kind == GAUSSIAN:
        z = (u - 0.5) * 2.0 * GAUSS_HALF_WIDTH
        return math.exp(-0.5 * z * z)
    return np.interp(u, xs, ys)


@nb.njit(cache=True, nogil=True)
def envelope_array(kind, u, xs, ys):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        out[i] = envelope_unit(kind, u[i], xs, ys)
    return out


@nb.njit(cache=True, nogil=True)
def _deriv(c, t, out, kind, xs, ys, start, duration, peak, g,
           diag_const, diag_rate, phase_const, phase_rate, phase_curv):
    m = g.shape[0]
    amp = -0.5 * peak * envelope_unit(kind, (t - start) / duration, xs, ys)
    c0 = c[0]
    acc = 0j
    for j in range(m):
        coupling = 0j
        if amp != 0.0 and g[j] != 0.0:
            ph = phase_const[j] + phase_rate[j] * t + phase_curv * t * t
            coupling = g[j] * amp * complex(math.cos(ph), math.sin(ph))
        cj = c[j + 1]
        # -i * (H c)
        out[j + 1] = -1j * (coupling * c0 + (diag_const[j] + diag_rate[j] * t) * cj)
        acc += coupling.conjugate() * cj
    out[0] = -1j * acc


@nb.njit(cache=True, nogil=True)
def rk4_star(c_init, t_start, step, n_steps, record_every, kind, xs, ys,
             env_start, env_duration, peak, g, diag_const, diag_rate,
             phase_const, phase_rate, phase_curv):
    """Integrate ``n_steps`` RK4 steps of size ``step`` from ``t_start``.

    Returns the states recorded every ``record_every`` steps, including the
    initial state, as an array of shape (n_steps // record_every + 1, M + 1).
    """
    dim = c_init.shape[0]
    n_rec = n_steps // record_every + 1
    rec = np.empty((n_rec, dim), dtype=np.complex128)
    c = c_init.copy()
    rec[0] = c
    k1 = np.empty(dim, dtype=np.complex128)
    k2 = np.empty(dim, dtype=np.complex128)
    k3 = np.empty(dim, dtype=np.complex128)
    k4 = np.empty(dim, dtype=np.complex128)
    tmp = np.empty(dim, dtype=np.complex128)
    half = 0.5 * step
    r = 1
    for n in range(n_steps):
        t = t_start + n * step
        _deriv(c, t, k1, kind, xs, ys, env_start, env_duration, peak, g,
               diag_const, diag_rate, phase_const, phase_rate, phase_curv)
        for i in range(dim):
            tmp[i] = c[i] + half * k1[i]
        _deriv(tmp, t + half, k2, kind, xs, ys, env_start, env_duration, peak, g,
               diag_const, diag_rate, phase_const, phase_rate, phase_curv)
        for i in range(dim):
            tmp[i] = c[i] + half * k2[i]
        _deriv(tmp, t + half, k3, kind, xs, ys, env_start, env_duration, peak, g,
               diag_const, diag_rate, phase_const, phase_rate, phase_curv)
        for i in range(dim):
            tmp[i] = c[i] + step * k3[i]
        _deriv(tmp, t + step, k4, kind, xs, ys, env_start, env_duration, peak, g,
               diag_const, diag_rate, phase_const, phase_rate, phase_curv)
        for i in range(dim):
            c[i] += step * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
        if (n + 1) % record_every == 0:
            rec[r] = c
            r += 1
    return rec


@nb.njit(cache=True, nogil=True)
def train_star(c_init, starts, duration, peaks, g, phase_const, phase_rate,
               n_steps, record_every, kind, xs, ys):
    """Propagate through consecutive subpulses in the transition-frequency frame.

    Free evolution between subpulses is the identity in this frame, so the
    state simply carries over. ``phase_const`` and ``phase_rate`` have shape
    (N, M). Returns N blocks of ``n_steps // record_every + 1`` records.
    """
    n_pulses = starts.shape[0]
    dim = c_init.shape[0]
    per = n_steps // record_every + 1
    rec = np.empty((n_pulses * per, dim), dtype=np.complex128)
    zeros = np.zeros(dim - 1)
    step = duration / n_steps
    c = c_init.copy()
    for k in range(n_pulses):
        seg = rk4_star(c, starts[k], step, n_steps, record_every, kind, xs, ys,
                       starts[k], duration, peaks[k], g, zeros, zeros,
                       phase_const[k], phase_rate[k], 0.0)
        rec[k * per:(k + 1) * per] = seg
        c = seg[per - 1].copy()
    return rec
