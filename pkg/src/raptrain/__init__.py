"""Digitized rapid adiabatic passage with weak pulse trains."""

from raptrain.digitizer import (
    MatchingReport,
    PulseTrain,
    Subpulse,
    SubpulseIntegrals,
    comb_train,
    digitize_matched,
    digitize_scaled,
    subpulse_integrals,
    verify_matching,
)
from raptrain.dynamics import (
    TWO_LEVEL,
    IntegrationError,
    LevelSystem,
    Trajectory,
    analytic_train_propagator,
    linearized_subpulse_unitary,
    magnus_subpulse_unitary,
    propagate_continuous,
    propagate_train,
)
from raptrain.metrics import (
    UndefinedRatioError,
    detuning_profile,
    final_yield,
    integrated_population_error,
    peak_aligned_map,
    superposition_ratio,
    tooth_yield,
)
from raptrain.pulses import (
    BLACKMAN,
    GAUSSIAN,
    ContinuousPulse,
    EnvelopeShape,
    continuous_detuning,
    continuous_phase,
    continuous_rabi,
    envelope_value,
    pulse_area,
    shape_factor,
)
from raptrain.spectrum import (
    gaussian_sideband_yield,
    gaussian_width_parameter,
    predicted_sideband_yield,
    predicted_superposition_ratio,
    sideband_amplitude,
    sideband_ratio,
    superposition_prefactor,
)

__version__ = "0.1.0"
