"""Time-dependent Schrodinger propagation for a ground state coupled to
M excited levels, plus the first-order analytic subpulse propagators.

Level j has transition frequency ``omega_ref + detunings[j]`` where
``omega_ref`` is the frequency that pulse detunings are measured from
(``detuning = omega_ref - field frequency``). For two-level problems
``detunings == (0.0,)``.

The continuous pulse is integrated in the field frame by default, where level
j carries the diagonal energy ``detunings[j] + detuning(t)`` and the coupling
``-g_j * rabi(t) / 2`` is real. Trains are integrated in the frame rotating at
the transition frequencies, where subpulse k couples level j through

    -g_j * rabi_k(t) / 2 * exp(i * (phase_k + detuning_k * (t - t_k) + detunings[j] * t))

and free evolution between subpulses is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from raptrain import _kernels
from raptrain.digitizer import PulseTrain, SubpulseIntegrals
from raptrain.pulses import ContinuousPulse
from raptrain.tables import write_table

SIGMA0 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)

# an integration is declared failed beyond this norm drift
_NORM_FAILURE = 1e-6
# largest accepted step * |H| for the fixed-step RK4
_MAX_STEP_PHASE = 0.5


class IntegrationError(RuntimeError):
    """Raised when a propagation cannot be trusted; carries diagnostics."""

    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        detail = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
        super().__init__(f"{message} ({detail})" if detail else message)


@dataclass(frozen=True)
class LevelSystem:
    """Ground state plus M excited levels driven by the same field."""

    detunings: tuple[float, ...] = (0.0,)
    couplings: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        det = tuple(float(d) for d in self.detunings)
        if len(det) < 1:
            raise ValueError("a level system needs at least one excited level")
        g = (1.0,) * len(det) if self.couplings is None else tuple(float(x) for x in self.couplings)
        if len(g) != len(det):
            raise ValueError("couplings and detunings must have the same length")
        if any(x < 0 for x in g):
            raise ValueError("coupling weights must be non-negative")
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "couplings", g)

    @property
    def num_excited(self) -> int:
        return len(self.detunings)

    @property
    def dim(self) -> int:
        return len(self.detunings) + 1

    @classmethod
    def v_system(cls, sideband_orders: Sequence[int], period: float) -> "LevelSystem":
        """Excited levels placed on comb teeth ``2 pi n / period`` of a carrier at the reference."""
        return cls(tuple(2 * math.pi * n / period for n in sideband_orders))


TWO_LEVEL = LevelSystem()


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.times.ndim != 1 or self.amplitudes.shape[0] != self.times.shape[0]:
            raise ValueError("times and amplitudes must have matching lengths")

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norms(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    @property
    def num_levels(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def header(self) -> list[str]:
        m = self.num_levels
        return (["time"] + [f"P{j}" for j in range(m)]
                + [c for j in range(m) for c in (f"re{j}", f"im{j}")])

    def rows(self):
        pops = self.populations
        for t, p, c in zip(self.times, pops, self.amplitudes):
            yield [t, *p, *[v for z in c for v in (z.real, z.imag)]]

    def to_csv(self, path):
        return write_table(path, self.header(), self.rows())


def _initial(system: LevelSystem, initial_state) -> np.ndarray:
    if initial_state is None:
        c = np.zeros(system.dim, dtype=complex)
        c[0] = 1.0
        return c
    c = np.array(initial_state, dtype=complex)
    if c.shape != (system.dim,):
        raise ValueError(f"initial state must have {system.dim} amplitudes")
    if abs(np.vdot(c, c).real - 1) > 1e-12:
        raise ValueError("initial state must be normalized")
    return c


def _check(traj_amps: np.ndarray, c0: np.ndarray, **diag):
    if not np.all(np.isfinite(traj_amps)):
        raise IntegrationError("non-finite amplitudes", **diag)
    drift = float(np.max(np.abs((np.abs(traj_amps) ** 2).sum(axis=1) - np.vdot(c0, c0).real)))
    if drift > _NORM_FAILURE:
        raise IntegrationError("norm not conserved", norm_drift=drift, **diag)


def propagate_continuous(pulse: ContinuousPulse, system: LevelSystem = TWO_LEVEL,
                         sample_count: int = 2001, *, steps_per_sample: Optional[int] = None,
                         frame: str = "field", initial_state=None) -> Trajectory:
    """Integrate the RWA dynamics under ``pulse`` over ``[0, duration]``.

    ``frame="phase"`` moves the detuning into the coupling phase instead of
    the diagonal; populations are the same. The default step count puts
    at least 800000 fixed RK4 steps across the pulse.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be at least 2")
    if steps_per_sample is None:
        steps_per_sample = max(1, math.ceil(800_000 / (sample_count - 1)))
    n_steps = (sample_count - 1) * steps_per_sample
    dur = pulse.duration
    step = dur / n_steps
    c0 = _initial(system, initial_state)
    m = system.num_excited
    det = np.array(system.detunings)
    g = np.array(system.couplings)
    base = det + pulse.carrier_offset - 0.5 * pulse.chirp_rate * dur
    hmax = 0.5 * pulse.peak_rabi * max(1.0, float(np.sqrt(np.sum(g**2))))
    hmax += float(np.max(np.abs(base)) + abs(pulse.chirp_rate) * dur)
    diag = dict(step=step, n_steps=n_steps, step_times_norm=step * hmax)
    if step <= 4 * np.finfo(float).eps * dur:
        raise IntegrationError("step size underflow", **diag)
    if step * hmax > _MAX_STEP_PHASE:
        raise IntegrationError("step too large for the Hamiltonian scale", **diag)
    if frame == "field":
        args = (base, np.full(m, pulse.chirp_rate), np.zeros(m), np.zeros(m), 0.0)
    elif frame == "phase":
        args = (np.zeros(m), np.zeros(m), np.zeros(m), base, 0.5 * pulse.chirp_rate)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    amps = _kernels.rk4_star(c0, 0.0, step, n_steps, steps_per_sample, pulse.envelope.code,
                             pulse.envelope.xs, pulse.envelope.ys, 0.0, dur, pulse.peak_rabi,
                             g, *args)
    _check(amps, c0, **diag)
    times = np.arange(sample_count) * (dur / (sample_count - 1))
    return Trajectory(times, amps)


def propagate_train(train: PulseTrain, system: LevelSystem = TWO_LEVEL,
                    samples_per_subpulse: int = 20, *, steps_per_subpulse: int = 400,
                    initial_state=None) -> Trajectory:
    """Propagate subpulse by subpulse with fixed-step RK4.

    Each subpulse contributes ``samples_per_subpulse + 1`` records, from its
    start to its end; the state is constant between consecutive subpulses.
    ``steps_per_subpulse`` must be a multiple of ``samples_per_subpulse``.
    """
    if samples_per_subpulse < 2:
        raise ValueError("samples_per_subpulse must be at least 2")
    if steps_per_subpulse % samples_per_subpulse:
        raise ValueError("steps_per_subpulse must be a multiple of samples_per_subpulse")
    c0 = _initial(system, initial_state)
    tau = train.tau
    step = tau / steps_per_subpulse
    peaks = train.peak_rabis
    det = np.array(system.detunings)
    g = np.array(system.couplings)
    t_k = train.peak_times
    d_k = train.detunings
    phase_const = (train.phases - d_k * t_k)[:, None] + np.zeros((1, system.num_excited))
    phase_rate = d_k[:, None] + det[None, :]
    hmax = 0.5 * float(np.max(peaks)) * float(np.sqrt(np.sum(g**2))) + float(np.max(np.abs(phase_rate)))
    diag = dict(step=step, steps_per_subpulse=steps_per_subpulse, step_times_norm=step * hmax)
    if step <= 4 * np.finfo(float).eps * max(1.0, abs(train.end)):
        raise IntegrationError("step size underflow", **diag)
    if step * hmax > _MAX_STEP_PHASE:
        raise IntegrationError("step too large for the subpulse coupling", **diag)
    env = train.envelope
    starts = t_k - 0.5 * tau
    record_every = steps_per_subpulse // samples_per_subpulse
    amps = _kernels.train_star(c0, np.ascontiguousarray(starts), tau, np.ascontiguousarray(peaks), g,
                               np.ascontiguousarray(phase_const), np.ascontiguousarray(phase_rate),
                               steps_per_subpulse, record_every, env.code, env.xs, env.ys)
    _check(amps, c0, **diag)
    local = np.arange(samples_per_subpulse + 1) * (step * record_every)
    times = (starts[:, None] + local[None, :]).ravel()
    return Trajectory(times, amps)


def magnus_subpulse_unitary(si: SubpulseIntegrals) -> np.ndarray:
    """First-order Magnus propagator ``exp(i (A sigma1 + phi sigma3) / 2)`` of one train period."""
    ae = si.effective_area
    # sin(ae/2)/ae written through sinc stays finite for subnormal ae
    half_sinc = 0.5 * float(np.sinc(ae / (2 * math.pi)))
    return SIGMA0 * math.cos(ae / 2) + 1j * (si.area * SIGMA1 + si.phase * SIGMA3) * half_sinc


def linearized_subpulse_unitary(si: SubpulseIntegrals) -> np.ndarray:
    return SIGMA0 + 0.5j * si.area * SIGMA1 + 0.5j * si.phase * SIGMA3


def _wrap(phase: float) -> float:
    return (phase + math.pi) % (2 * math.pi) - math.pi


def analytic_train_propagator(train: PulseTrain, system: LevelSystem = TWO_LEVEL,
                              initial_state=None) -> tuple[np.ndarray, np.ndarray]:
    """Compose linearized, phase-dressed subpulse steps (first-order oracle).

    Works in the frame that co-rotates with the accumulated free phase
    ``sum_{j<k} phi_j`` (``phi_j = T * detuning_j``, wrapped to [-pi, pi)).
    Step k is::

        sigma0 + i/2 cos(x_k) A_k sigma1 - i/2 sin(x_k) A_k sigma2 + i/2 phi_k sigma3

    where the extra phase ``x_k`` is the accumulated free phase minus the
    subpulse carrier phase. For a comb train resting on a tooth it is the
    constant ``-detuning * t_0``. The state is renormalized after every step
    since the linearized step is not unitary.

    Returns the (unnormalized) product of the steps and the populations after
    each step, the first row being the initial populations.
    """
    if system.num_excited != 1:
        raise ValueError("the analytic train propagator handles two-level systems only")
    level_shift = system.detunings[0]
    c = _initial(system, initial_state)
    total = SIGMA0.copy()
    pops = [np.abs(c) ** 2]
    acc = 0.0
    for sp in train.subpulses:
        # a level offset is equivalent to shifting every subpulse detuning
        si = SubpulseIntegrals(sp.area, train.period * (sp.detuning + level_shift))
        phi = _wrap(si.phase)
        x = acc - (sp.phase + level_shift * sp.peak_time)
        step = (SIGMA0 + 0.5j * math.cos(x) * si.area * SIGMA1
                - 0.5j * math.sin(x) * si.area * SIGMA2 + 0.5j * phi * SIGMA3)
        total = step @ total
        c = step @ c
        c = c / np.linalg.norm(c)
        pops.append(np.abs(c) ** 2)
        acc = _wrap(acc + phi)
    return total, np.array(pops)
