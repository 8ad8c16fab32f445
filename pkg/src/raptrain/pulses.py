"""Pulse envelopes and the long linearly chirped reference pulse.

Units are dimensionless: times in units of the reference pulse duration and
angular frequencies in units of its inverse (hbar = 1).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping, Sequence

import numpy as np
from scipy import integrate, special

from raptrain import _kernels

_KINDS = {"blackman": _kernels.BLACKMAN, "gaussian": _kernels.GAUSSIAN, "table": _kernels.TABLE}


@dataclass(frozen=True)
class EnvelopeShape:
    """Normalized (peak 1) envelope on the support ``[0, duration]``.

    ``kind`` is ``"blackman"``, ``"gaussian"`` (centered, sigma =
    duration / 6, truncated at +-3 sigma without renormalization) or
    ``"table"``. A table envelope is a list of ``(fraction, amplitude)`` pairs
    spanning fractions 0 to 1, linearly interpolated.
    """

    kind: str = "blackman"
    table: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}; expected one of {sorted(_KINDS)}")
        if self.kind == "table":
            pts = tuple((float(x), float(y)) for x, y in self.table)
            object.__setattr__(self, "table", pts)
            if len(pts) < 2:
                raise ValueError("a table envelope needs at least two points")
            xs = [p[0] for p in pts]
            if xs[0] != 0.0 or xs[-1] != 1.0:
                raise ValueError("table fractions must start at 0 and end at 1")
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise ValueError("table fractions must be strictly increasing")
            if any(p[1] < 0 for p in pts):
                raise ValueError("table amplitudes must be non-negative")
        elif self.table:
            raise ValueError(f"{self.kind} envelope takes no table")

    @classmethod
    def blackman(cls) -> "EnvelopeShape":
        return cls("blackman")

    @classmethod
    def gaussian(cls) -> "EnvelopeShape":
        return cls("gaussian")

    @classmethod
    def sampled(cls, points: Sequence[Sequence[float]]) -> "EnvelopeShape":
        return cls("table", tuple(tuple(p) for p in points))

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind != "table":
            return np.zeros(1), np.zeros(1)
        arr = np.asarray(self.table, dtype=float)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])

    @property
    def xs(self) -> np.ndarray:
        return self._arrays[0]

    @property
    def ys(self) -> np.ndarray:
        return self._arrays[1]

    def __call__(self, u):
        """Evaluate at fractional time(s) ``u`` (0 outside [0, 1])."""
        if np.ndim(u) == 0:
            return _kernels.envelope_unit(self.code, float(u), self.xs, self.ys)
        u = np.asarray(u, dtype=float)
        return _kernels.envelope_array(self.code, u.ravel(), self.xs, self.ys).reshape(u.shape)

    def to_config(self) -> Any:
        if self.kind == "table":
            return {"table": [list(p) for p in self.table]}
        return self.kind


BLACKMAN = EnvelopeShape.blackman()
GAUSSIAN = EnvelopeShape.gaussian()


def envelope_value(shape: EnvelopeShape, t, duration: float):
    """Normalized envelope amplitude at time ``t`` of a pulse on ``[0, duration]``."""
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration}")
    return shape(np.asarray(t, dtype=float) / duration if np.ndim(t) else float(t) / duration)


def shape_factor(shape: EnvelopeShape) -> float:
    """Time average S0 of the normalized envelope over its support."""
    if shape.kind == "blackman":
        return 0.42
    if shape.kind == "gaussian":
        h = _kernels.GAUSS_HALF_WIDTH
        # mean of exp(-z^2/2) over z in [-h, h]
        return math.sqrt(2 * math.pi) * special.erf(h / math.sqrt(2)) / (2 * h)
    # exact for the piecewise-linear interpolant
    return float(integrate.trapezoid(shape.ys, shape.xs))


@dataclass(frozen=True)
class ContinuousPulse:
    """Long chirped pulse with Rabi frequency ``peak_rabi * S(t)`` and detuning
    ``carrier_offset + chirp_rate * (t - duration / 2)``."""

    peak_rabi: float
    duration: float = 1.0
    chirp_rate: float = 0.0
    envelope: EnvelopeShape = field(default=BLACKMAN)
    carrier_offset: float = 0.0

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.peak_rabi < 0:
            raise ValueError(f"peak_rabi must be non-negative, got {self.peak_rabi}")

    @classmethod
    def from_area(cls, area: float, duration: float = 1.0, chirp: float = 0.0,
                  envelope: EnvelopeShape = BLACKMAN, carrier_offset: float = 0.0) -> "ContinuousPulse":
        """Build from total area and the dimensionless chirp ``alpha * duration**2``."""
        peak = area / (duration * shape_factor(envelope))
        return cls(peak, duration, chirp / duration**2, envelope, carrier_offset)

    @property
    def area(self) -> float:
        return self.peak_rabi * self.duration * shape_factor(self.envelope)

    @property
    def dimensionless_chirp(self) -> float:
        return self.chirp_rate * self.duration**2


def continuous_rabi(pulse: ContinuousPulse, t):
    return pulse.peak_rabi * envelope_value(pulse.envelope, t, pulse.duration)


def continuous_detuning(pulse: ContinuousPulse, t):
    return pulse.carrier_offset + pulse.chirp_rate * (np.asarray(t, dtype=float) - pulse.duration / 2)


def continuous_phase(pulse: ContinuousPulse, t):
    """Accumulated detuning phase, the integral of the detuning from 0 to ``t``."""
    t = np.asarray(t, dtype=float)
    return pulse.carrier_offset * t + pulse.chirp_rate * (0.5 * t * t - 0.5 * pulse.duration * t)


def pulse_area(pulse: ContinuousPulse) -> float:
    """Integral of the Rabi frequency over the support, by adaptive quadrature."""
    if pulse.peak_rabi == 0:
        return 0.0
    points = None
    if pulse.envelope.kind == "table":
        points = [x * pulse.duration for x in pulse.envelope.xs[1:-1]]
    val, _ = integrate.quad(lambda t: continuous_rabi(pulse, t), 0.0, pulse.duration,
                            points=points, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


_PI_RE = re.compile(r"^\s*([-+]?[0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*$")


def parse_angle(value) -> float:
    """Accept plain numbers or strings such as ``"5pi"`` / ``"0.5*pi"``."""
    if isinstance(value, bool):
        raise TypeError("expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            coef = m.group(1)
            return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
        return float(value)
    raise TypeError("expected a number")


def envelope_from_config(value) -> EnvelopeShape:
    if isinstance(value, str):
        return EnvelopeShape(value.lower())
    if isinstance(value, Mapping) and set(value) == {"table"}:
        return EnvelopeShape.sampled(value["table"])
    raise ValueError("envelope must be 'blackman', 'gaussian' or {table: [[fraction, amplitude], ...]}")


def pulse_from_config(section: Mapping[str, Any]) -> ContinuousPulse:
    """Build a pulse from a validated ``pulse`` config section.

    Exactly one of ``area`` / ``peak_rabi`` is required; ``chirp`` is the
    dimensionless product alpha * duration**2.
    """
    if ("area" in section) == ("peak_rabi" in section):
        raise ValueError("exactly one of 'area' or 'peak_rabi' must be given")
    envelope = envelope_from_config(section.get("envelope", "blackman"))
    duration = float(section.get("duration", 1.0))
    chirp = float(section.get("chirp", 0.0))
    offset = float(section.get("carrier_offset", 0.0))
    if "area" in section:
        return ContinuousPulse.from_area(parse_angle(section["area"]), duration, chirp, envelope, offset)
    return ContinuousPulse(float(section["peak_rabi"]), duration, chirp / duration**2, envelope, offset)
