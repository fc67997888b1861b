"""A minimal SLH algebra for cascaded two-port networks of small systems.

Components are (S, L, H) triplets over dense complex operator matrices:
``s`` is an n_ports x n_ports matrix of complex scalars, ``l`` a vector of
collapse operators (one per port) and ``h`` the internal Hamiltonian.
Series and concatenation products follow the standard composition rules

    G2 <| G1 = (S2 S1, L2 + S2 L1, H1 + H2 + Im{L2^dag S2 L1})
    Ga  #  Gb = (diag(Sa, Sb), (La, Lb), Ha + Hb)

with Im{A} = (A - A^dag) / 2i taken elementwise on operators.

The chiral atom of this package is the cascade of two coupling points, a
propagation segment, and a coherent drive, concatenated for the forward and
backward directions.  Coherent drive amplitudes are represented as c-number
multiples of the identity inside L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AtomRates, ChiralCoupling
from .spectra import SpectrumTrace

UNITARITY_TOL = 1e-10
HERMITICITY_TOL = 1e-12

# Two-level operator basis in the (|g>, |e>) ordering; the matrices satisfy
# sigma_pm = (sigma_x +- i sigma_y) / 2 and sigma_x sigma_y = i sigma_z.
IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=complex)


class DegenerateResonanceError(ValueError):
    """Raised when the total linewidth vanishes and t is undefined."""


class WindingUndefinedError(ValueError):
    """Raised when a trace does not span the resonance well enough."""


def is_hermitian(a: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    return bool(np.linalg.norm(a - a.conj().T) < tol * max(1.0, np.linalg.norm(a)))


def is_unitary(s: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    n = s.shape[0]
    return bool(np.linalg.norm(s.conj().T @ s - np.eye(n)) < tol)


def _operator_imag(a: np.ndarray) -> np.ndarray:
    """Anti-Hermitian part divided by 2i; Hermitian by construction."""
    return (a - a.conj().T) / 2.0j


@dataclass(frozen=True)
class DriveField:
    """Coherent input tone: amplitude alpha in sqrt(photons/s), detuning in rad/s."""

    alpha: complex
    detuning: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and np.isfinite(self.detuning)):
            raise ValueError("drive amplitude and detuning must be finite")


@dataclass(frozen=True)
class SlhTriplet:
    """An (S, L, H) component with value semantics."""

    s: np.ndarray
    l: tuple[np.ndarray, ...]
    h: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.s, dtype=complex))
        ops = tuple(np.asarray(op, dtype=complex) for op in self.l)
        h = np.asarray(self.h, dtype=complex)
        if s.shape[0] != s.shape[1]:
            raise ValueError("scattering matrix must be square")
        if len(ops) != s.shape[0]:
            raise ValueError(
                f"port mismatch: S is {s.shape[0]}-port but L has {len(ops)} entries"
            )
        if h.shape[0] != h.shape[1]:
            raise ValueError("Hamiltonian must be square")
        for op in ops:
            if op.shape != h.shape:
                raise ValueError("all collapse operators must share the Hilbert dimension of H")
        if not is_unitary(s):
            raise ValueError("scattering matrix must be unitary")
        if not is_hermitian(h):
            raise ValueError("Hamiltonian must be Hermitian")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "l", ops)
        object.__setattr__(self, "h", h)

    @property
    def n_ports(self) -> int:
        return self.s.shape[0]

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def identity_triplet(n_ports: int = 1, dim: int = 2) -> SlhTriplet:
    """The neutral element of the series product."""
    zero = np.zeros((dim, dim), dtype=complex)
    return SlhTriplet(np.eye(n_ports, dtype=complex), tuple(zero for _ in range(n_ports)), zero)


def series(g2: SlhTriplet, g1: SlhTriplet) -> SlhTriplet:
    """Feed the outputs of g1 into the inputs of g2 (g2 <| g1)."""
    if g1.n_ports != g2.n_ports:
        raise ValueError(f"port mismatch: {g2.n_ports}-port <| {g1.n_ports}-port")
    if g1.dim != g2.dim:
        raise ValueError(f"Hilbert dimension mismatch: {g2.dim} vs {g1.dim}")
    s = g2.s @ g1.s
    routed = [
        sum(g2.s[i, j] * g1.l[j] for j in range(g1.n_ports))
        for i in range(g1.n_ports)
    ]
    l_out = tuple(g2.l[i] + routed[i] for i in range(g1.n_ports))
    interaction = sum(
        g2.l[i].conj().T @ routed[i] for i in range(g1.n_ports)
    )
    h = g1.h + g2.h + _operator_imag(interaction)
    return SlhTriplet(s, l_out, h)


def concat(ga: SlhTriplet, gb: SlhTriplet) -> SlhTriplet:
    """Stack two components side by side on disjoint ports (ga # gb)."""
    if ga.dim != gb.dim:
        raise ValueError(f"Hilbert dimension mismatch: {ga.dim} vs {gb.dim}")
    na, nb = ga.n_ports, gb.n_ports
    s = np.zeros((na + nb, na + nb), dtype=complex)
    s[:na, :na] = ga.s
    s[na:, na:] = gb.s
    return SlhTriplet(s, ga.l + gb.l, ga.h + gb.h)


def _coupling_point(c: ChiralCoupling, phase: float, h: np.ndarray) -> SlhTriplet:
    amp = math.sqrt(c.kappa_em / 2.0) * np.exp(1j * phase)
    return SlhTriplet(np.eye(1, dtype=complex), (amp * SIGMA_MINUS,), h)


def _displace_into_hamiltonian(g: SlhTriplet) -> SlhTriplet:
    """Move c-number parts of the collapse operators into the Hamiltonian.

    Splitting L = a*I + X (X traceless) and shifting H -> H + Im{a X^dag}
    leaves the master equation invariant; the returned triplet keeps the
    original L so the input-output relations are unchanged.
    """
    h = g.h.copy()
    dim = g.dim
    eye = np.eye(dim, dtype=complex)
    for op in g.l:
        a = np.trace(op) / dim
        x = op - a * eye
        h = h + _operator_imag(a * x.conj().T)
    return SlhTriplet(g.s, g.l, h)


def build_chiral_atom(c: ChiralCoupling, drive: DriveField) -> SlhTriplet:
    """Cascade the two coupling points into the two-port chiral atom.

    The forward path is (right point) <| (propagation) <| (left point) <|
    (drive); the backward path is (left point) <| (propagation) <| (right
    point), with the coherent tone entering on the forward path only.  The
    returned Hamiltonian is expressed in the frame of the drive and of the
    measured resonance: the coherent displacement of the forward collapse
    operator is absorbed into H, and the drive-independent level shift from
    inter-point exchange is referenced away (it is already contained in the
    measured transition frequency that defines the detuning).
    """
    half_detuning_sz = (drive.detuning / 2.0) * SIGMA_Z
    zero = np.zeros((2, 2), dtype=complex)

    g_forward_left = _coupling_point(c, 0.0, half_detuning_sz)
    g_forward_right = _coupling_point(c, c.phi_c, zero)
    g_backward_left = _coupling_point(c, 0.0, zero)
    g_backward_right = _coupling_point(c, c.phi_c, zero)
    g_propagation = SlhTriplet(
        np.array([[np.exp(1j * c.phi_wg)]]), (zero,), zero
    )
    g_drive = SlhTriplet(np.eye(1, dtype=complex), (drive.alpha * IDENTITY2,), zero)

    forward = series(g_forward_right, series(g_propagation, series(g_forward_left, g_drive)))
    backward = series(g_backward_left, series(g_propagation, g_backward_right))

    total = _displace_into_hamiltonian(concat(forward, backward))

    # Static exchange shift between the coupling points, obtained from the
    # same cascade without the drive; referencing it away pins the resonance
    # at delta_omega = 0.
    idle_forward = series(
        g_forward_right, series(g_propagation, g_forward_left)
    )
    exchange_shift = concat(idle_forward, backward).h - half_detuning_sz
    return SlhTriplet(total.s, total.l, total.h - exchange_shift)


def weak_transmission(
    c: ChiralCoupling,
    rates: AtomRates,
    delta_omega: float | np.ndarray,
    include_propagation_phase: bool = False,
):
    """Weak-drive transmission t = 1 - gamma_f / (i*delta_omega + gamma_tot/2).

    The global propagation phase exp(i*phi_wg) is stripped by default so
    that t -> 1 far from resonance; pass ``include_propagation_phase=True``
    for the raw coefficient.
    """
    if rates.gamma_tot == 0.0:
        raise DegenerateResonanceError("gamma_tot = 0: transmission is undefined")
    delta = np.asarray(delta_omega, dtype=float)
    t = 1.0 - rates.gamma_f / (1j * delta + rates.gamma_tot / 2.0)
    if include_propagation_phase:
        t = np.exp(1j * c.phi_wg) * t
    if np.ndim(delta_omega) == 0:
        return complex(t)
    return t


def weak_transmission_slh(
    c: ChiralCoupling,
    rates: AtomRates,
    delta_omega: float | np.ndarray,
    alpha: complex = 1.0e-3,
    include_propagation_phase: bool = False,
):
    """Weak-drive transmission obtained through the composed SLH triplet.

    The two-port triplet is built by cascading (its Hamiltonian is affine in
    the detuning, so one composition serves a sweep), the steady state of
    the coherence is solved in the linear (unsaturated) limit

        <sigma_-> = -i * <e|H|g> * <sigma_z>_0 / (i*delta_eff + gamma_tot/2)

    with <sigma_z>_0 = -1, and the transmission follows from the forward
    collapse operator, t = <L_f> / alpha_in.  Cross-checks the closed form
    of :func:`weak_transmission` through an independent route.
    """
    if rates.gamma_tot == 0.0:
        raise DegenerateResonanceError("gamma_tot = 0: transmission is undefined")
    deltas = np.atleast_1d(np.asarray(delta_omega, dtype=float))
    # the composed Hamiltonian is affine in the detuning, H(d) = H(0) + d/2 sz,
    # so one composition serves the whole sweep
    g = build_chiral_atom(c, DriveField(alpha, 0.0))
    drive_coeff = g.h[1, 0]  # <e|H|g>, the sigma_+ coefficient
    delta_eff = deltas + float((g.h[1, 1] - g.h[0, 0]).real)
    sigma_minus = -1j * drive_coeff / (1j * delta_eff + rates.gamma_tot / 2.0)
    l_forward = g.l[0]
    amp_in = np.trace(l_forward) / 2.0  # c-number part of L_f
    amp_atom = l_forward[0, 1]  # sigma_- component of L_f
    out = (amp_in + amp_atom * sigma_minus) / alpha
    if not include_propagation_phase:
        out = out * np.exp(-1j * c.phi_wg)
    if np.ndim(delta_omega) == 0:
        return complex(out[0])
    return out


def _contrast_fwhm(freqs: np.ndarray, contrast: np.ndarray) -> tuple[int, float]:
    """Peak index and FWHM (Hz) of the squared contrast profile."""
    power = contrast**2
    peak = int(np.argmax(power))
    half = power[peak] / 2.0
    below_left = np.nonzero(power[:peak] < half)[0]
    below_right = np.nonzero(power[peak:] < half)[0]
    if below_left.size == 0 or below_right.size == 0:
        raise WindingUndefinedError(
            "trace does not resolve the half-maximum on both sides of the resonance"
        )
    i_left = below_left[-1]
    i_right = peak + below_right[0]

    def crossing(i_lo: int, i_hi: int) -> float:
        p_lo, p_hi = power[i_lo], power[i_hi]
        if p_hi == p_lo:
            return freqs[i_lo]
        frac = (half - p_lo) / (p_hi - p_lo)
        return freqs[i_lo] + frac * (freqs[i_hi] - freqs[i_lo])

    f_left = crossing(i_left, i_left + 1)
    f_right = crossing(i_right, i_right - 1)
    return peak, abs(f_right - f_left)


def phase_winding(trace: SpectrumTrace, min_span_linewidths: float = 10.0) -> float:
    """Total unwrapped phase excursion of t across the trace, in radians.

    A trace dominated by forward coupling winds the transmission phase by a
    full 2*pi; otherwise the excursion stays at or below pi.  A featureless
    trace returns 0.  Raises :class:`WindingUndefinedError` when the sweep
    does not extend at least ``min_span_linewidths`` linewidths on both
    sides of the resonance (linewidth taken as the FWHM of |1 - t|^2).
    """
    contrast = trace.contrast
    if contrast.max() < 1e-9:
        return 0.0
    peak, fwhm = _contrast_fwhm(trace.freqs, contrast)
    f_peak = trace.freqs[peak]
    span_low = f_peak - trace.freqs[0]
    span_high = trace.freqs[-1] - f_peak
    if min(span_low, span_high) < min_span_linewidths * fwhm:
        raise WindingUndefinedError(
            f"sweep spans ({span_low:.3g}, {span_high:.3g}) Hz around the resonance "
            f"but {min_span_linewidths} linewidths = {min_span_linewidths * fwhm:.3g} Hz are required"
        )
    phase = np.unwrap(np.angle(trace.t))
    return float(phase.max() - phase.min())
