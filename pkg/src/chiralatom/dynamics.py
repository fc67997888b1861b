"""Driven-dissipative dynamics of the chiral atom.

Closed-form Bloch steady states, power-broadened transmission, the
three-Lorentzian fluorescence triplet, driven/ring-down time traces, a dense
Lindblad steady-state solver for dimensions up to 4, and the three-level
model for the second-transition directionality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import HBAR
from .core import AtomRates
from .spectra import PsdTrace, SpectrumTrace

TWO_PI = 2.0 * math.pi


class OverdampedDriveError(ValueError):
    """Raised for Rabi parameters below the oscillatory-branch threshold."""


class SteadyStateMultiplicityError(RuntimeError):
    """Raised when the Liouvillian has more than one steady state."""


@dataclass(frozen=True)
class BlochState:
    """Expectation values (sx, sy, sz) of the Pauli vector."""

    sx: float
    sy: float
    sz: float

    def __post_init__(self):
        norm2 = self.sx**2 + self.sy**2 + self.sz**2
        if norm2 > 1.0 + 1e-9:
            raise ValueError(f"Bloch vector lies outside the unit ball: |s|^2 = {norm2}")


@dataclass(frozen=True)
class DriveSpec:
    """Coherent drive: Rabi frequency and detuning (rad/s), optional power (W)."""

    omega_r: float
    delta_omega: float = 0.0
    p_in: float | None = None

    def __post_init__(self):
        if self.omega_r < 0:
            raise ValueError("omega_r must be >= 0")


@dataclass(frozen=True)
class MollowParams:
    """Rates entering the fluorescence triplet (all rad/s).

    gamma1/gamma2 are the energy relaxation and total decoherence rates;
    omega0 is the carrier (emitter) frequency.
    """

    gamma1: float
    gamma2: float
    omega0: float

    def __post_init__(self):
        if self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ValueError("gamma1 and gamma2 must be > 0")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be > 0")

    @property
    def gamma_s(self) -> float:
        """Sideband half-width, (gamma1 + gamma2) / 2 by construction."""
        return (self.gamma1 + self.gamma2) / 2.0


@dataclass(frozen=True)
class ThreeLevelPorts:
    """Per-port couplings of the e-f transition and the g-e rates.

    kappa_l, kappa_r: per-port e-f emission magnitudes (rad/s), defined so
    that at the optimal phase setting the directional rates are
    (kappa_l + kappa_r)/2 +- sqrt(kappa_l * kappa_r).
    anharmonicity: omega_ge - omega_ef (rad/s).
    ge_rates: decoherence bookkeeping of the g-e transition.
    """

    kappa_l: float
    kappa_r: float
    anharmonicity: float
    ge_rates: AtomRates

    def __post_init__(self):
        if self.kappa_l < 0 or self.kappa_r < 0:
            raise ValueError("port couplings must be >= 0")


def bloch_steady_state(d: DriveSpec, gamma1: float, gamma2: float) -> BlochState:
    """Steady state of the coherently driven, damped two-level atom.

    Closed forms for a drive along sigma_y at Rabi frequency Omega_R and
    detuning delta_omega:

        sx = -G1 G2 W / N,  sy = -G1 d W / N,  sz = -1 + G2 W^2 / N,
        N  = G1 (G2^2 + d^2) + G2 W^2.
    """
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("gamma1 and gamma2 must be > 0")
    w, delta = d.omega_r, d.delta_omega
    denom = gamma1 * (gamma2**2 + delta**2) + gamma2 * w**2
    sx = -gamma1 * gamma2 * w / denom
    sy = -gamma1 * delta * w / denom
    sz = -1.0 + gamma2 * w**2 / denom
    return BlochState(sx, sy, sz)


def transmission_strong(
    d: DriveSpec, gamma_f: float, gamma1: float, gamma2: float
) -> complex:
    """Power-broadened transmission of the forward-coupled atom.

    t = 1 - gamma_f * G1 * (G2 - i d) / (W^2 G2 + G1 (d^2 + G2^2)); assumes
    the chiral setting (no backward emission in the formula).  Reduces to
    the weak-drive Lorentzian with gamma_tot = 2 * gamma2 as W -> 0.
    """
    w, delta = d.omega_r, d.delta_omega
    denom = w**2 * gamma2 + gamma1 * (delta**2 + gamma2**2)
    return 1.0 - gamma_f * gamma1 * (gamma2 - 1j * delta) / denom


def mollow_psd(
    m: MollowParams,
    gamma_f: float,
    omega_r: float,
    delta_omega_grid: np.ndarray,
) -> PsdTrace:
    """Incoherent emission triplet of the strongly driven chiral atom.

    Three Lorentzians at detunings {-W, 0, +W}: sidebands of half-width
    gamma_s = (gamma1 + gamma2)/2 and a central peak of half-width gamma2.
    The central term is the Lorentzian 2*gamma2 / (d^2 + gamma2^2); the
    frequency-integrated density is hbar*omega0*gamma_f/2 regardless of the
    drive strength (one quarter in each sideband, one half in the center).
    """
    d = np.asarray(delta_omega_grid, dtype=float)
    gs, g2 = m.gamma_s, m.gamma2
    prefactor = HBAR * m.omega0 * gamma_f / 4.0 / TWO_PI
    shape = (
        gs / ((d + omega_r) ** 2 + gs**2)
        + 2.0 * g2 / (d**2 + g2**2)
        + gs / ((d - omega_r) ** 2 + gs**2)
    )
    return PsdTrace(d, prefactor * shape)


def rabi_from_power(p_in: float, gamma_f: float, omega_ge: float) -> float:
    """Rabi frequency of a waveguide drive, Omega_R = sqrt(4 P Gf / hbar w).

    Omega_R^2 is linear in the input power with slope 4*gamma_f/(hbar*omega_ge).
    """
    if p_in < 0 or gamma_f <= 0 or omega_ge <= 0:
        raise ValueError("power must be >= 0 and rates/frequency > 0")
    return math.sqrt(4.0 * p_in * gamma_f / (HBAR * omega_ge))


def rabi_trace(
    tau_p_grid: np.ndarray, d: DriveSpec, gamma1: float, gamma2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Driven evolution (sx, sz) versus pulse duration from the ground state.

    Valid on the underdamped branch Omega_R >= |gamma1 - gamma2| / 2 for a
    resonant drive; the measured quadrature convention is such that the
    early-time signal rises as +sin(Omega_R tau) exp(-Gamma_R tau).
    """
    if d.delta_omega != 0.0:
        raise ValueError("rabi_trace is defined for resonant drive (delta_omega = 0)")
    w = d.omega_r
    threshold = abs(gamma1 - gamma2) / 2.0
    if w < threshold:
        raise OverdampedDriveError(
            f"Omega_R = {w:.6g} is below the oscillatory threshold |G1-G2|/2 = {threshold:.6g}"
        )
    tau = np.asarray(tau_p_grid, dtype=float)
    gamma_r = (gamma1 + gamma2) / 2.0
    nu = math.sqrt(max(w**2 - threshold**2, 0.0))
    x_inf = gamma1 * w / (gamma1 * gamma2 + w**2)
    z_inf = -gamma1 * gamma2 / (gamma1 * gamma2 + w**2)
    envelope = np.exp(-gamma_r * tau)
    cos_nu = np.cos(nu * tau)
    # sin(nu t)/nu stays finite at the critically damped edge nu = 0
    sin_over_nu = tau * np.sinc(nu * tau / np.pi)
    sx = x_inf - ((gamma_r * x_inf - w) * sin_over_nu + x_inf * cos_nu) * envelope
    sz = z_inf - (1.0 + z_inf) * (cos_nu + gamma_r * sin_over_nu) * envelope
    return sx, sz


def ring_down(
    initial: BlochState, t_grid: np.ndarray, gamma1: float, gamma2: float
) -> tuple[np.ndarray, np.ndarray]:
    """Free decay after the drive is switched off.

    sx(t) = sx(0) exp(-gamma2 t); sz(t) = (1 + sz(0)) exp(-gamma1 t) - 1.
    """
    t = np.asarray(t_grid, dtype=float)
    sx = initial.sx * np.exp(-gamma2 * t)
    sz = (1.0 + initial.sz) * np.exp(-gamma1 * t) - 1.0
    return sx, sz


def _vectorized_liouvillian(
    h: np.ndarray, dissipators: list[tuple[float, np.ndarray]]
) -> np.ndarray:
    """Matrix of the Lindblad generator acting on column-stacked rho."""
    dim = h.shape[0]
    eye = np.eye(dim, dtype=complex)
    liouv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for rate, op in dissipators:
        x = np.asarray(op, dtype=complex)
        xdx = x.conj().T @ x
        liouv += rate * (
            np.kron(x.conj(), x)
            - 0.5 * np.kron(eye, xdx)
            - 0.5 * np.kron(xdx.T, eye)
        )
    return liouv


def lindblad_steady_state(
    h: np.ndarray, dissipators: list[tuple[float, np.ndarray]]
) -> np.ndarray:
    """Steady-state density matrix from the null space of the Liouvillian.

    ``dissipators`` is a list of (rate, collapse operator) pairs entering
    D[X] at the given rate.  The null space of the vectorized generator is
    found by SVD; a degenerate null space raises
    :class:`SteadyStateMultiplicityError`.  The returned matrix is
    Hermitian, unit trace, and positive semidefinite to solver tolerance.
    """
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    if h.shape != (dim, dim):
        raise ValueError("Hamiltonian must be square")
    if dim > 4:
        raise ValueError("dense solver is limited to dimension <= 4")
    if not dissipators:
        raise ValueError("at least one dissipator is required")
    for rate, op in dissipators:
        if rate < 0:
            raise ValueError("dissipator rates must be >= 0")
        if np.asarray(op).shape != (dim, dim):
            raise ValueError("collapse operators must match the Hamiltonian dimension")

    liouv = _vectorized_liouvillian(h, dissipators)
    _, svals, vh = np.linalg.svd(liouv)
    scale = max(svals[0], 1.0)
    null_count = int(np.sum(svals < 1e-9 * scale))
    if null_count > 1:
        raise SteadyStateMultiplicityError(
            f"Liouvillian null space has dimension {null_count}"
        )
    if null_count == 0:
        raise SteadyStateMultiplicityError("no steady state found within tolerance")
    rho = vh[-1].conj().reshape((dim, dim), order="F")
    trace = np.trace(rho)
    if abs(trace) < 1e-12:
        raise SteadyStateMultiplicityError("null vector is traceless; steady state ill-defined")
    rho = rho / trace
    rho = (rho + rho.conj().T) / 2.0

    residual = np.linalg.norm(liouv @ rho.flatten(order="F")) / scale
    if residual > 1e-10:
        raise RuntimeError(f"steady-state residual {residual:.3e} exceeds tolerance")
    eigmin = float(np.linalg.eigvalsh(rho).min())
    if eigmin < -1e-10:
        raise RuntimeError(f"steady state not positive semidefinite (min eig {eigmin:.3e})")
    return rho


def ef_rates(p: ThreeLevelPorts) -> tuple[float, float, float]:
    """Directional e-f emission rates at the optimal phase setting.

    gamma_f = (kl + kr)/2 + sqrt(kl kr); gamma_b = (kl + kr)/2 - sqrt(kl kr);
    the directionality ratio is their quotient (inf for balanced ports).
    """
    mean = (p.kappa_l + p.kappa_r) / 2.0
    cross = math.sqrt(p.kappa_l * p.kappa_r)
    gamma_f = mean + cross
    gamma_b = mean - cross
    if gamma_b == 0.0:
        eta = math.inf if gamma_f > 0 else 1.0
    else:
        eta = gamma_f / gamma_b
    return gamma_f, gamma_b, eta


def _ef_port_amplitudes(
    p: ThreeLevelPorts, phi_c: float, phi_wg: float
) -> tuple[complex, complex]:
    """Forward/backward port-interference amplitudes for the e-f operator.

    The e-f collapse operator is sqrt(2)|e><f| (transmon matrix element);
    amplitudes are scaled so a single port alone decays |f> at kappa/2.
    """
    al = math.sqrt(p.kappa_l / 4.0)
    ar = math.sqrt(p.kappa_r / 4.0)
    nu_f = al * np.exp(1j * phi_wg) + ar * np.exp(1j * phi_c)
    nu_b = al + ar * np.exp(1j * (phi_wg + phi_c))
    return nu_f, nu_b


def two_tone_trace(
    p: ThreeLevelPorts,
    ge_drive: DriveSpec,
    probe_grid: np.ndarray,
    phi_c: float = math.pi / 2.0,
    phi_wg: float = math.pi / 2.0,
    probe_amp: float | None = None,
    dephasing_rate: float | None = None,
    f_ef_hz: float = 0.0,
) -> SpectrumTrace:
    """Weak-probe transmission near the e-f transition of the driven transmon.

    The g-e transition is driven continuously (Rabi frequency and detuning
    from ``ge_drive``) while a weak forward probe is swept across the e-f
    resonance; ``probe_grid`` holds the probe detunings from omega_ef in
    rad/s.  Each point solves the three-level master equation with per-port
    e-f collapse operators carrying the propagation and parametric phases,
    total g-e relaxation, and number-operator dephasing (rate defaults to
    the g-e pure dephasing).  Co-rotating cross drives are neglected.

    Returned frequencies are ``f_ef_hz`` plus the probe detuning in Hz.
    """
    probe = np.asarray(probe_grid, dtype=float)
    nu_f, nu_b = _ef_port_amplitudes(p, phi_c, phi_wg)

    ket = np.eye(3, dtype=complex)
    proj_e = np.outer(ket[1], ket[1])
    proj_f = np.outer(ket[2], ket[2])
    sigma_ge = np.outer(ket[0], ket[1])
    a_ef = math.sqrt(2.0) * np.outer(ket[1], ket[2])
    number_op = np.diag(np.array([0.0, 1.0, 2.0], dtype=complex))

    gamma1_ge = p.ge_rates.gamma_1
    gamma_phi = p.ge_rates.gamma_phi if dephasing_rate is None else dephasing_rate
    if probe_amp is None:
        scale = p.kappa_l + p.kappa_r + gamma1_ge
        probe_amp = 1e-3 * math.sqrt(scale) if scale > 0 else 1e-3

    h_ge_drive = (ge_drive.omega_r / 2.0) * (sigma_ge + sigma_ge.conj().T)
    # the forward probe reaches the output with the propagation phase attached
    probe_in = probe_amp * np.exp(1j * phi_wg)
    h_probe = -1j * (
        probe_in * np.conj(nu_f) * a_ef.conj().T - np.conj(probe_in) * nu_f * a_ef
    )

    dissipators: list[tuple[float, np.ndarray]] = [
        (1.0, nu_f * a_ef),
        (1.0, nu_b * a_ef),
    ]
    if gamma1_ge > 0:
        dissipators.append((gamma1_ge, sigma_ge))
    if gamma_phi > 0:
        dissipators.append((2.0 * gamma_phi, number_op))

    delta_d = ge_drive.delta_omega
    t_out = np.empty(probe.shape, dtype=complex)
    for i, delta_p in enumerate(probe):
        h = (
            -delta_d * proj_e
            - (delta_d + delta_p) * proj_f
            + h_ge_drive
            + h_probe
        )
        rho = lindblad_steady_state(h, dissipators)
        a_expect = np.trace(rho @ a_ef)
        t_out[i] = 1.0 + np.exp(-1j * phi_wg) * nu_f * a_expect / probe_amp

    return SpectrumTrace(f_ef_hz + probe / TWO_PI, t_out)
