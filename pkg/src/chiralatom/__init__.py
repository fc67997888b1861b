"""Simulation and analysis toolkit for a chiral artificial atom on a 1D waveguide.

The package covers the closed-form directional coupling rates, a small SLH
algebra for the cascaded two-point atom, driven-dissipative dynamics
(power broadening, fluorescence triplet, Rabi/ring-down, three-level
two-tone response), the sideband coupled-mode model of the parametric
coupler, resonance fitting with directionality confidence intervals, and
the thermal decoherence budget.
"""

__version__ = "0.1.0"

from .core import (
    AtomRates,
    CalibrationError,
    ChiralCoupling,
    FluxCalibration,
    ThermalBath,
    WaveguideGeometry,
    decay_rates,
    flux_correction,
    propagation_phase,
    rates_from_coupling,
    thermal_occupation,
)
from .spectra import PsdTrace, SpectrumTrace
from .slh import (
    DriveField,
    SlhTriplet,
    build_chiral_atom,
    concat,
    identity_triplet,
    phase_winding,
    series,
    weak_transmission,
    weak_transmission_slh,
)
from .dynamics import (
    BlochState,
    DriveSpec,
    MollowParams,
    ThreeLevelPorts,
    bloch_steady_state,
    ef_rates,
    lindblad_steady_state,
    mollow_psd,
    rabi_from_power,
    rabi_trace,
    ring_down,
    transmission_strong,
    two_tone_trace,
)
from .cmt import (
    BlockMatrix,
    RegimeEstimate,
    SidebandModel,
    bessel_weights,
    build_blocks,
    cmt_transmission,
    coupler_drive_calibration,
    regime_estimate,
)
from .fit import (
    CircleResonanceFitter,
    DirectionalityBound,
    FanoResonanceFitter,
    FitResult,
    circle_fit,
    directionality_ci,
    exact_directionality_vs_phase,
    fit_fano,
    phase_noise_bound,
)
from .thermal import (
    DecoherenceBudget,
    beta_factor,
    purcell_factor,
    thermal_gamma_prime,
)

__all__ = [
    "__version__",
    "AtomRates",
    "BlochState",
    "BlockMatrix",
    "CalibrationError",
    "ChiralCoupling",
    "CircleResonanceFitter",
    "DecoherenceBudget",
    "DirectionalityBound",
    "DriveField",
    "DriveSpec",
    "FanoResonanceFitter",
    "FitResult",
    "FluxCalibration",
    "MollowParams",
    "PsdTrace",
    "RegimeEstimate",
    "SidebandModel",
    "SlhTriplet",
    "SpectrumTrace",
    "ThermalBath",
    "ThreeLevelPorts",
    "WaveguideGeometry",
    "bessel_weights",
    "beta_factor",
    "bloch_steady_state",
    "build_blocks",
    "build_chiral_atom",
    "circle_fit",
    "cmt_transmission",
    "concat",
    "coupler_drive_calibration",
    "decay_rates",
    "directionality_ci",
    "ef_rates",
    "exact_directionality_vs_phase",
    "fit_fano",
    "flux_correction",
    "identity_triplet",
    "lindblad_steady_state",
    "mollow_psd",
    "phase_noise_bound",
    "phase_winding",
    "propagation_phase",
    "purcell_factor",
    "rabi_from_power",
    "rabi_trace",
    "rates_from_coupling",
    "ring_down",
    "series",
    "thermal_gamma_prime",
    "thermal_occupation",
    "transmission_strong",
    "two_tone_trace",
    "weak_transmission",
    "weak_transmission_slh",
]
