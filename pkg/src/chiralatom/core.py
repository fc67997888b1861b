"""Device parameters and closed-form chiral coupling rates.

Conventions used across the package:

* All rates and detunings are angular frequencies (rad/s).  File and CLI
  interfaces use ordinary frequency (Hz) and convert at the boundary.
* Phases are stored reduced to [0, 2*pi); comparisons between phases should
  use :func:`circular_distance`.
* The detuning convention is ``delta_omega = omega - omega_ge`` (probe minus
  atom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_B, SPEED_OF_LIGHT

TWO_PI = 2.0 * math.pi


class CalibrationError(ValueError):
    """Raised when a flux calibration matrix cannot be inverted."""


def wrap_phase(phi: float) -> float:
    """Reduce an angle to the canonical interval [0, 2*pi)."""
    return float(np.mod(phi, TWO_PI))


def circular_distance(a: float, b: float) -> float:
    """Smallest angular separation between two phases, in [0, pi]."""
    d = abs(wrap_phase(a) - wrap_phase(b))
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class ChiralCoupling:
    """Parametric coupling of the two-point atom to the waveguide.

    kappa_em: magnitude of the decay rate at each coupling point (rad/s).
    phi_c:    relative parametric-drive phase, phi_r - phi_l (rad).
    phi_wg:   propagation phase between the coupling points (rad).
    """

    kappa_em: float
    phi_c: float
    phi_wg: float

    def __post_init__(self):
        if self.kappa_em < 0:
            raise ValueError(f"kappa_em must be >= 0, got {self.kappa_em}")
        object.__setattr__(self, "phi_c", wrap_phase(self.phi_c))
        object.__setattr__(self, "phi_wg", wrap_phase(self.phi_wg))


@dataclass(frozen=True)
class WaveguideGeometry:
    """Coupling-point separation and the waveguide dispersion inputs.

    d: separation between coupling points (m); f: reference frequency (Hz);
    eps_eff: effective permittivity of the coplanar waveguide.
    """

    d: float
    f: float
    eps_eff: float

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"separation d must be >= 0, got {self.d}")
        if self.eps_eff < 1:
            raise ValueError(f"eps_eff must be >= 1, got {self.eps_eff}")


@dataclass(frozen=True)
class AtomRates:
    """Decoherence bookkeeping for the two-level atom (all rad/s).

    gamma_f, gamma_b: emission rates into forward/backward waveguide modes.
    gamma_prime:      intrinsic decoherence (non-waveguide loss plus twice
                      the pure dephasing).
    gamma_phi:        pure dephasing rate.
    """

    gamma_f: float
    gamma_b: float
    gamma_prime: float
    gamma_phi: float = 0.0

    def __post_init__(self):
        for name in ("gamma_f", "gamma_b", "gamma_prime", "gamma_phi"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.gamma_loss < -1e-12 * max(self.gamma_prime, 1.0):
            raise ValueError(
                "gamma_prime must be >= 2*gamma_phi "
                f"(got gamma_prime={self.gamma_prime}, gamma_phi={self.gamma_phi})"
            )

    @property
    def gamma_tot(self) -> float:
        """Total linewidth of the weak-drive resonance."""
        return self.gamma_f + self.gamma_b + self.gamma_prime

    @property
    def gamma_loss(self) -> float:
        """Energy decay to channels other than the waveguide."""
        return self.gamma_prime - 2.0 * self.gamma_phi

    @property
    def gamma_1(self) -> float:
        """Total energy relaxation rate."""
        return self.gamma_f + self.gamma_b + self.gamma_loss

    @property
    def gamma_2(self) -> float:
        """Total decoherence rate, gamma_1 / 2 + gamma_phi."""
        return self.gamma_1 / 2.0 + self.gamma_phi


@dataclass(frozen=True)
class FluxCalibration:
    """Mutual-inductance matrix linking bias currents to SQUID fluxes.

    m: 3x3 matrix in pH, ordered (left coupler, emitter, right coupler).
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"inductance matrix must be 3x3, got {m.shape}")
        if np.any(np.diag(m) <= 0):
            raise CalibrationError("diagonal mutual inductances must be positive")
        if abs(np.linalg.det(m)) < 1e-12 * np.abs(m).max() ** 3:
            raise CalibrationError("inductance matrix is singular")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class ThermalBath:
    """Waveguide bath at a given temperature (K) and frequency (Hz)."""

    temperature: float
    frequency: float

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.frequency <= 0:
            raise ValueError("frequency must be > 0")


def decay_rates(c: ChiralCoupling) -> tuple[float, float]:
    """Forward and backward emission rates of the two-point atom.

    gamma_f = kappa_em * (1 + cos(phi_c - phi_wg))
    gamma_b = kappa_em * (1 + cos(phi_c + phi_wg))

    Both lie in [0, 2*kappa_em]; the backward rate vanishes exactly when
    phi_c + phi_wg = pi (mod 2*pi).
    """
    gamma_f = c.kappa_em * (1.0 + math.cos(c.phi_c - c.phi_wg))
    gamma_b = c.kappa_em * (1.0 + math.cos(c.phi_c + c.phi_wg))
    return gamma_f, gamma_b


def rates_from_coupling(
    c: ChiralCoupling, gamma_prime: float, gamma_phi: float = 0.0
) -> AtomRates:
    """Assemble :class:`AtomRates` from a coupling and intrinsic decoherence."""
    gamma_f, gamma_b = decay_rates(c)
    return AtomRates(gamma_f, gamma_b, gamma_prime, gamma_phi)


def propagation_phase(g: WaveguideGeometry) -> float:
    """Propagation phase omega * d / v between the coupling points.

    The waveguide mode speed is v = c0 / sqrt(eps_eff); the phase is
    evaluated at the single reference frequency g.f (dispersion across a
    sweep bandwidth is neglected) and reduced to [0, 2*pi).
    """
    v = SPEED_OF_LIGHT / math.sqrt(g.eps_eff)
    return wrap_phase(TWO_PI * g.f * g.d / v)


def thermal_occupation(b: ThermalBath) -> float:
    """Bose-Einstein occupation 1 / (exp(hbar*omega/kB*T) - 1).

    Returns exactly 0 at zero temperature.
    """
    if b.temperature == 0.0:
        return 0.0
    x = HBAR * TWO_PI * b.frequency / (K_B * b.temperature)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def flux_correction(cal: FluxCalibration, target_fluxes: np.ndarray) -> np.ndarray:
    """Bias currents that realize the target fluxes, m^-1 @ fluxes.

    Units follow the calibration matrix: with m in pH and fluxes in pWb the
    result is in A.  Raises :class:`CalibrationError` for a singular matrix.
    """
    fluxes = np.asarray(target_fluxes, dtype=float)
    if fluxes.shape != (3,):
        raise ValueError(f"expected a 3-vector of fluxes, got shape {fluxes.shape}")
    try:
        return np.linalg.solve(cal.m, fluxes)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded in ctor
        raise CalibrationError("inductance matrix is singular") from exc
