"""Comb sideband amplitudes of a pulse train and the yields they predict.

For N identical, equally spaced subpulses the train spectrum is a comb of
teeth at ``2 pi n / spacing`` whose weights follow the transform of a single
subpulse envelope; the comb factor is common to all teeth and drops out of
every ratio used here.
"""

from __future__ import annotations

import math

from scipy import integrate

from raptrain._kernels import GAUSS_HALF_WIDTH
from raptrain.digitizer import PulseTrain
from raptrain.pulses import EnvelopeShape
from raptrain.tables import write_table

_QUAD = dict(epsrel=1e-12, limit=400)


def envelope_transform(envelope: EnvelopeShape, duration: float, omega: float) -> complex:
    """``int_0^duration S(t) exp(-i omega t) dt`` by oscillatory quadrature."""
    half = 0.5 * duration
    points = None
    if envelope.kind == "table":
        points = [x * duration - half for x in envelope.xs[1:-1]]

    def f(s):
        return envelope((s + half) / duration)

    # the odd part vanishes for symmetric envelopes; relative tolerance alone cannot be met
    quad = dict(_QUAD, epsabs=1e-14 * duration)

    if omega == 0:
        re = integrate.quad(f, -half, half, points=points, **quad)[0]
        im = 0.0
    elif points:
        # QAWO cannot take breakpoints: integrate piece by piece
        edges = [-half, *points, half]
        re = sum(integrate.quad(f, a, b, weight="cos", wvar=omega, **quad)[0] for a, b in zip(edges, edges[1:]))
        im = -sum(integrate.quad(f, a, b, weight="sin", wvar=omega, **quad)[0] for a, b in zip(edges, edges[1:]))
    else:
        re = integrate.quad(f, -half, half, weight="cos", wvar=omega, **quad)[0]
        # built-in envelopes are even about the centre: the sine part is exactly zero
        im = 0.0 if envelope.kind != "table" else -integrate.quad(f, -half, half, weight="sin", wvar=omega, **quad)[0]
    # centered integral times the phase of the shift to [0, duration]
    return complex(re, im) * complex(math.cos(omega * half), -math.sin(omega * half))


def tooth_frequency(train: PulseTrain, n: int) -> float:
    return 2 * math.pi * n / train.spacing


def sideband_amplitude(train: PulseTrain, n: int) -> float:
    """Weight of comb tooth ``n``: ``|transform of one subpulse envelope|`` at ``2 pi n / spacing``."""
    return abs(envelope_transform(train.envelope, train.tau, tooth_frequency(train, n)))


def sideband_ratio(train: PulseTrain, n: int) -> float:
    return sideband_amplitude(train, n) / sideband_amplitude(train, 0)


def predicted_sideband_yield(train: PulseTrain, n: int) -> float:
    """Excited population reached through tooth ``n`` by a train of carrier area pi."""
    return math.sin(0.5 * math.pi * sideband_ratio(train, n)) ** 2


def gaussian_sideband_yield(n: int, tau: float, period: float) -> float:
    """Closed form ``sin^2(pi/2 exp(-tau^2 n^2 / T^2))``.

    ``tau`` is the width parameter of that expression; an (untruncated)
    Gaussian envelope with standard deviation ``sigma`` has
    ``tau = pi * sqrt(2) * sigma`` (see ``gaussian_width_parameter``).
    """
    if not period > 0:
        raise ValueError("period must be positive")
    return math.sin(0.5 * math.pi * math.exp(-(tau * n / period) ** 2)) ** 2


def gaussian_width_parameter(duration: float) -> float:
    """Closed-form width ``tau`` matching this package's Gaussian subpulse of ``duration``."""
    sigma = duration / (2 * GAUSS_HALF_WIDTH)
    return math.pi * math.sqrt(2) * sigma


def superposition_prefactor(train: PulseTrain, n: int, m: int) -> float:
    """Factor ``sqrt(F_n^2 + F_m^2) / F_0`` by which two-tooth excitation
    enhances the effective Rabi frequency."""
    f0 = sideband_amplitude(train, 0)
    return math.hypot(sideband_amplitude(train, n), sideband_amplitude(train, m)) / f0


def predicted_superposition_ratio(train: PulseTrain, n: int, m: int = 0) -> float:
    """``F_m^2 / (F_m^2 + F_n^2)``: population share of the level on tooth ``m``."""
    fm = sideband_amplitude(train, m) ** 2
    return fm / (fm + sideband_amplitude(train, n) ** 2)


SIDEBAND_COLUMNS = ("n", "F_ratio", "predicted_yield")


def write_sideband_table(train: PulseTrain, orders, path):
    rows = []
    for n in orders:
        r = sideband_ratio(train, n)
        rows.append((int(n), r, math.sin(0.5 * math.pi * r) ** 2))
    return write_table(path, SIDEBAND_COLUMNS, rows)
