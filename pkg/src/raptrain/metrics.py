"""Agreement between continuous and digitized dynamics, and final-state observables."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from raptrain.digitizer import PulseTrain
from raptrain.dynamics import TWO_LEVEL, LevelSystem, Trajectory, propagate_train
from raptrain.spectrum import sideband_ratio, tooth_frequency


class UndefinedRatioError(ValueError):
    pass


def peak_aligned_map(train: PulseTrain) -> Callable[[np.ndarray], np.ndarray]:
    """Affine map from train time to source time sending each peak to its sample time.

    Identity for duration-matched trains.
    """
    if train.sample_times is None:
        raise ValueError("train was not compiled from a source pulse")
    t0 = train.subpulses[0].peak_time
    s0 = train.sample_times[0]
    scale = (train.sample_times[-1] - s0) / (train.peak_times[-1] - t0)

    def mapping(t):
        return s0 + (np.asarray(t, dtype=float) - t0) * scale

    return mapping


def integrated_population_error(reference: Trajectory, other: Trajectory,
                                time_map: Optional[Callable] = None, level: int = 0) -> float:
    """RMS difference of one level's population over the common time window.

    ``time_map`` carries ``other``'s times onto ``reference``'s axis. Both
    histories are linearly interpolated onto the union of their sample times
    inside the overlap, and the squared difference is averaged with the
    trapezoidal rule.
    """
    t_ref = reference.times
    t_oth = other.times if time_map is None else np.asarray(time_map(other.times), dtype=float)
    lo = max(t_ref[0], t_oth[0])
    hi = min(t_ref[-1], t_oth[-1])
    if not hi > lo:
        raise ValueError("trajectories do not overlap in time")
    grid = np.concatenate([t_ref, t_oth, [lo, hi]])
    grid = np.unique(grid[(grid >= lo) & (grid <= hi)])
    a = np.interp(grid, t_ref, reference.populations[:, level])
    b = np.interp(grid, t_oth, other.populations[:, level])
    return math.sqrt(max(0.0, float(integrate.trapezoid((a - b) ** 2, grid)) / (hi - lo)))


def final_yield(traj: Trajectory, level: int = 1) -> float:
    if not 0 <= level < traj.num_levels:
        raise IndexError(f"level {level} out of range for {traj.num_levels} levels")
    return float(traj.populations[-1, level])


def superposition_ratio(traj: Trajectory) -> float:
    """``P1 / (P1 + P2)`` at the final time of a three-level (V) trajectory."""
    if traj.num_levels != 3:
        raise ValueError("superposition_ratio needs exactly two excited levels")
    p = traj.populations[-1]
    denom = p[1] + p[2]
    if denom < 1e-12:
        raise UndefinedRatioError(f"excited manifold is empty (P1 + P2 = {denom:.3g})")
    return float(p[1] / denom)


def tooth_yield(template: PulseTrain, n: int, offset: float = 0.0, *, rescale: bool = True,
                system: LevelSystem = TWO_LEVEL, steps_per_subpulse: int = 400) -> float:
    """Final excited population with the carrier ``offset`` away from tooth ``n``.

    With ``rescale`` the amplitudes are multiplied by ``F_0 / F_n`` so the
    area carried by tooth ``n`` equals the template's carrier area.
    """
    scale = 1.0 / sideband_ratio(template, n) if rescale else 1.0
    train = template.with_carrier(tooth_frequency(template, n) + offset, scale)
    traj = propagate_train(train, system, samples_per_subpulse=2, steps_per_subpulse=steps_per_subpulse)
    return final_yield(traj, 1)


def detuning_profile(template: PulseTrain, n: int, offsets: Sequence[float], *,
                     system: LevelSystem = TWO_LEVEL, steps_per_subpulse: int = 400,
                     workers: int = 1) -> np.ndarray:
    """Rescaled yields around tooth ``n`` for each carrier offset (angular frequency)."""

    def one(off):
        return tooth_yield(template, n, off, rescale=True, system=system,
                           steps_per_subpulse=steps_per_subpulse)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(one, offsets)))
    return np.array([one(o) for o in offsets])
