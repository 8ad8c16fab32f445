"""Compile a long chirped pulse into a train of weak, short subpulses.

Each subpulse samples the reference pulse at uniformly spaced times
``t_k = k * dt`` (``dt = duration / (N - 1)``) so that, subpulse by subpulse,

    area_k            = rabi(t_k) * dt
    period * detuning_k = detuning(t_k) * dt

hold exactly. Two layouts are provided: the duration-matched one, where the
train occupies the same time window as the reference pulse, and the
time-scaled one, where subpulses are ``r1 * tau`` apart for an arbitrary
subpulse duration ``tau``.

Subpulse carrier phases are part of the compiled program. Digitized trains
copy the reference pulse's accumulated detuning phase at each sample time;
constant-frequency (comb) trains are phase-locked to absolute time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from raptrain.pulses import (
    BLACKMAN,
    ContinuousPulse,
    EnvelopeShape,
    continuous_detuning,
    continuous_phase,
    continuous_rabi,
    shape_factor,
)
from raptrain.tables import write_table


@dataclass(frozen=True)
class Subpulse:
    """One subpulse: envelope ``peak_rabi * S((t - peak_time) / duration + 1/2)``,
    constant detuning, and carrier ``phase`` at the peak (transition frame)."""

    peak_rabi: float
    detuning: float
    peak_time: float
    duration: float
    envelope: EnvelopeShape = field(default=BLACKMAN)
    phase: float = 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"subpulse duration must be positive, got {self.duration}")
        if self.peak_rabi < 0:
            raise ValueError(f"subpulse peak_rabi must be non-negative, got {self.peak_rabi}")

    @property
    def area(self) -> float:
        return self.peak_rabi * self.duration * shape_factor(self.envelope)

    @property
    def start(self) -> float:
        return self.peak_time - 0.5 * self.duration


@dataclass(frozen=True)
class SubpulseIntegrals:
    area: float
    phase: float

    def __post_init__(self):
        if self.area < 0:
            raise ValueError("subpulse area must be non-negative")

    @property
    def effective_area(self) -> float:
        return math.hypot(self.area, self.phase)


@dataclass(frozen=True)
class PulseTrain:
    """An equally spaced train of identical-shape subpulses.

    ``period`` is the free-evolution interval T = r1 * tau that enters the
    per-subpulse phase ``T * detuning``. In the time-scaled and comb layouts
    it is also the peak-to-peak spacing; in the duration-matched layout the
    spacing is ``T + tau`` (see ``spacing``).
    """

    subpulses: tuple[Subpulse, ...]
    period: float
    r1: float
    r2: Optional[float] = None
    source: Optional[ContinuousPulse] = None
    sample_times: Optional[tuple[float, ...]] = None
    regime: str = "comb"

    def __post_init__(self):
        object.__setattr__(self, "subpulses", tuple(self.subpulses))
        n = len(self.subpulses)
        if n < 2:
            raise ValueError(f"a train needs at least 2 subpulses, got {n}")
        if self.r1 < 1:
            raise ValueError(f"subpulses overlap: r1 must be >= 1, got {self.r1}")
        first = self.subpulses[0]
        if any(sp.duration != first.duration or sp.envelope != first.envelope for sp in self.subpulses):
            raise ValueError("all subpulses must share duration and envelope")
        gaps = np.diff(self.peak_times)
        tol = 64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(self.peak_times))))
        if np.ptp(gaps) > tol:
            raise ValueError("subpulse peak times must be uniformly spaced")
        if gaps[0] < first.duration * (1 - 1e-12):
            raise ValueError("subpulses overlap: spacing is shorter than the subpulse duration")
        if self.sample_times is not None:
            object.__setattr__(self, "sample_times", tuple(float(x) for x in self.sample_times))
            if len(self.sample_times) != n:
                raise ValueError("sample_times must have one entry per subpulse")

    @property
    def n_subpulses(self) -> int:
        return len(self.subpulses)

    @property
    def tau(self) -> float:
        return self.subpulses[0].duration

    @property
    def envelope(self) -> EnvelopeShape:
        return self.subpulses[0].envelope

    @property
    def peak_times(self) -> np.ndarray:
        return np.array([sp.peak_time for sp in self.subpulses])

    @property
    def spacing(self) -> float:
        """Peak-to-peak repetition period; comb teeth sit at multiples of 2 pi / spacing."""
        t = self.peak_times
        return float((t[-1] - t[0]) / (len(t) - 1))

    @property
    def peak_rabis(self) -> np.ndarray:
        return np.array([sp.peak_rabi for sp in self.subpulses])

    @property
    def detunings(self) -> np.ndarray:
        return np.array([sp.detuning for sp in self.subpulses])

    @property
    def phases(self) -> np.ndarray:
        return np.array([sp.phase for sp in self.subpulses])

    @property
    def areas(self) -> np.ndarray:
        return self.peak_rabis * self.tau * shape_factor(self.envelope)

    @property
    def start(self) -> float:
        return self.subpulses[0].start

    @property
    def end(self) -> float:
        return self.subpulses[-1].start + self.tau

    def scaled(self, factor: float) -> "PulseTrain":
        """Copy with every subpulse amplitude multiplied by ``factor``."""
        return replace(self, subpulses=tuple(replace(sp, peak_rabi=sp.peak_rabi * factor)
                                             for sp in self.subpulses))

    def with_carrier(self, detuning: float, amplitude_scale: float = 1.0) -> "PulseTrain":
        """Constant-frequency copy at ``detuning``, phase-locked to absolute time."""
        subs = tuple(replace(sp, detuning=detuning, phase=detuning * sp.peak_time,
                             peak_rabi=sp.peak_rabi * amplitude_scale) for sp in self.subpulses)
        return replace(self, subpulses=subs, regime="comb", source=None, sample_times=None)


def _check_counts(n_subpulses: int, r1: float):
    if int(n_subpulses) != n_subpulses or n_subpulses < 2:
        raise ValueError(f"N must be an integer >= 2, got {n_subpulses}")
    if not r1 >= 1:
        raise ValueError(f"subpulses overlap: r1 must be >= 1, got {r1}")


def _sample(source: ContinuousPulse, n: int):
    dt = source.duration / (n - 1)
    times = np.arange(n) * dt
    times[-1] = source.duration
    return dt, times


def digitize_matched(source: ContinuousPulse, n_subpulses: int, r1: float,
                     envelope: Optional[EnvelopeShape] = None) -> PulseTrain:
    """Duration-matched train: subpulses peak at the sample times themselves.

    With ``duration = (T + tau) * (N - 1)`` and ``T = r1 * tau``::

        peak_rabi_k = rabi(t_k) * (1 + r1) / S0
        detuning_k  = detuning(t_k) * (1 + 1 / r1)
    """
    _check_counts(n_subpulses, r1)
    n = int(n_subpulses)
    envelope = source.envelope if envelope is None else envelope
    s0 = shape_factor(envelope)
    dt, times = _sample(source, n)
    tau = dt / (1 + r1)
    rabi = continuous_rabi(source, times) * (1 + r1) / s0
    det = continuous_detuning(source, times) * (1 + 1 / r1)
    phase = continuous_phase(source, times)
    subs = tuple(Subpulse(float(w), float(d), float(t), tau, envelope, float(p))
                 for w, d, t, p in zip(rabi, det, times, phase))
    return PulseTrain(subs, r1 * tau, float(r1), None, source, tuple(times), "matched")


def digitize_scaled(source: ContinuousPulse, n_subpulses: int, r1: float, r2: float,
                    t0: Optional[float] = None, envelope: Optional[EnvelopeShape] = None) -> PulseTrain:
    """Time-scaled train with ``tau = duration / (N * r2)`` and spacing ``T = r1 * tau``.

    ``peak_rabi_k = rabi(t_k) * (r2 / S0) * N / (N - 1)`` and
    ``detuning_k = detuning(t_k) * (r2 / r1) * N / (N - 1)``; peaks sit at
    ``t0 + k * T`` with ``t0`` defaulting to ``tau / 2``.
    """
    _check_counts(n_subpulses, r1)
    if not r2 > 0:
        raise ValueError(f"r2 must be positive, got {r2}")
    n = int(n_subpulses)
    envelope = source.envelope if envelope is None else envelope
    s0 = shape_factor(envelope)
    _, times = _sample(source, n)
    tau = source.duration / (n * r2)
    period = r1 * tau
    t0 = 0.5 * tau if t0 is None else t0
    corr = n / (n - 1)
    rabi = continuous_rabi(source, times) * (r2 / s0) * corr
    det = continuous_detuning(source, times) * (r2 / r1) * corr
    phase = continuous_phase(source, times)
    subs = tuple(Subpulse(float(w), float(d), t0 + k * period, tau, envelope, float(p))
                 for k, (w, d, p) in enumerate(zip(rabi, det, phase)))
    return PulseTrain(subs, period, float(r1), float(r2), source, tuple(times), "scaled")


def comb_train(n_subpulses: int = 100, r1: float = 100.0, period: float = 1.0,
               area: float = math.pi, detuning: float = 0.0,
               envelope: EnvelopeShape = BLACKMAN, t0: Optional[float] = None) -> PulseTrain:
    """Constant-amplitude, constant-frequency train whose subpulse areas sum to ``area``.

    Subpulses have duration ``period / r1`` and peak at ``t0 + k * period``
    (``t0`` defaults to half a subpulse). Carrier phases follow absolute time,
    as for a mode-locked comb.
    """
    _check_counts(n_subpulses, r1)
    n = int(n_subpulses)
    tau = period / r1
    t0 = 0.5 * tau if t0 is None else t0
    peak = area / (n * tau * shape_factor(envelope))
    subs = tuple(Subpulse(peak, detuning, t0 + k * period, tau, envelope, detuning * (t0 + k * period))
                 for k in range(n))
    return PulseTrain(subs, period, float(r1), None, None, None, "comb")


def subpulse_integrals(sp: Subpulse, period: float) -> SubpulseIntegrals:
    return SubpulseIntegrals(sp.area, period * sp.detuning)


@dataclass(frozen=True)
class MatchingReport:
    area_residuals: np.ndarray
    phase_residuals: np.ndarray

    @property
    def max_area_residual(self) -> float:
        return float(np.max(self.area_residuals))

    @property
    def max_phase_residual(self) -> float:
        return float(np.max(self.phase_residuals))

    @property
    def rms_area_residual(self) -> float:
        return float(np.sqrt(np.mean(self.area_residuals**2)))

    @property
    def rms_phase_residual(self) -> float:
        return float(np.sqrt(np.mean(self.phase_residuals**2)))


def verify_matching(train: PulseTrain, source: Optional[ContinuousPulse] = None) -> MatchingReport:
    """Residuals of the per-subpulse area and phase conditions against ``source``
    (default: the pulse the train was compiled from)."""
    source = train.source if source is None else source
    if source is None:
        raise ValueError("train has no source pulse to verify against")
    n = train.n_subpulses
    dt, times = _sample(source, n)
    if train.sample_times is not None and not np.allclose(train.sample_times, times, rtol=0, atol=1e-12 * source.duration):
        raise ValueError(f"train sample times do not match a uniform {n}-point sampling of the source")
    areas = train.areas
    phases = train.period * train.detunings
    return MatchingReport(np.abs(areas - continuous_rabi(source, times) * dt),
                          np.abs(phases - continuous_detuning(source, times) * dt))


TRAIN_COLUMNS = ("index", "t_k", "peak_rabi", "detuning", "area", "free_phase", "carrier_phase")


def train_rows(train: PulseTrain):
    for k, sp in enumerate(train.subpulses):
        si = subpulse_integrals(sp, train.period)
        yield (k, sp.peak_time, sp.peak_rabi, sp.detuning, si.area, si.phase, sp.phase)


def write_train_csv(train: PulseTrain, path):
    return write_table(path, TRAIN_COLUMNS, train_rows(train))
