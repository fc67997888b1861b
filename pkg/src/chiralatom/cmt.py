"""Sideband coupled-mode model of the frequency-modulated tunable coupler.

A coupler mode between the emitter and a waveguide-coupled filter cavity is
frequency modulated at Delta with amplitude epsilon.  In the frequency
domain each mode splits into sidebands spaced by Delta; couplings between
sidebands of different order k are weighted by Bessel functions J_k of the
modulation index epsilon/Delta.  The coupled-mode equations are assembled
into a block matrix (3x3 blocks per sideband order, conjugate-transpose
pairing across the diagonal) and the waveguide transmission follows from a
linear solve with only the filter-cavity baseband driven:

    t(omega) = 1 - i (kappa_e / 2) [M^-1]_{R0,R0}

The order-k coupling blocks carry the Jacobi-Anger phases of the
mode-resolved frequency-domain equations: (-i)^k J_k on the emitter and
cavity rows and (+i)^k J_k on the coupler row, which makes each block
Hermitian on its own.  (A uniform -(i)^k prefactor on every entry is a
common shorthand; it coincides with the mode-resolved structure at even k
but disagrees with direct time integration of the modulated equations at
odd k, so the mode-resolved form is used throughout.)

Sign conventions follow the frequency-domain Langevin equations with +i*omega
on the left-hand side; with the more common -i*omega convention the matrix
is the elementwise conjugate and t is conjugated accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectra import SpectrumTrace

TWO_PI = 2.0 * math.pi
_TRUNCATION_WEIGHT = 1e-3

DISPERSIVE = "dispersive"
HYBRIDIZED_CAVITY = "hybridized-cavity"
FULLY_HYBRIDIZED = "fully-hybridized"
_REGIMES = (DISPERSIVE, HYBRIDIZED_CAVITY, FULLY_HYBRIDIZED)


@dataclass(frozen=True)
class SidebandModel:
    """Three-mode ladder with a frequency-modulated middle mode (all rad/s).

    omega_e, omega_c, omega_r: emitter, coupler mean, filter-cavity
    frequencies; g_ec, g_cr: direct couplings; kappa_e, kappa_t: cavity
    external and total decay; gamma_e, gamma_c: internal losses of emitter
    and coupler; epsilon, delta_mod: modulation amplitude and frequency;
    n_trunc: sideband truncation order (None selects automatically).
    """

    omega_e: float
    omega_c: float
    omega_r: float
    g_ec: float
    g_cr: float
    kappa_e: float
    kappa_t: float
    gamma_e: float = 0.0
    gamma_c: float = 0.0
    epsilon: float = 0.0
    delta_mod: float = 1.0
    n_trunc: int | None = None

    def __post_init__(self):
        if not (self.kappa_t >= self.kappa_e >= 0):
            raise ValueError("require kappa_t >= kappa_e >= 0")
        if self.gamma_e < 0 or self.gamma_c < 0:
            raise ValueError("internal losses must be >= 0")
        if self.delta_mod <= 0:
            raise ValueError("modulation frequency must be > 0")
        if self.n_trunc is not None and self.n_trunc < 0:
            raise ValueError("n_trunc must be >= 0")

    @property
    def modulation_index(self) -> float:
        return self.epsilon / self.delta_mod

    def truncation_order(self) -> int:
        """n_trunc if given, else the smallest order with J_{N+1} below 1e-3."""
        if self.n_trunc is not None:
            return self.n_trunc
        return auto_truncation(self.epsilon, self.delta_mod)


def bessel_weights(epsilon: float, delta_mod: float, max_order: int) -> np.ndarray:
    """First-kind Bessel values J_0 .. J_max at x = epsilon / delta_mod.

    Computed by downward (Miller) recurrence with the sum-rule normalization
    J_0 + 2 sum_k J_2k = 1; no special-function library is involved.
    """
    if delta_mod <= 0:
        raise ValueError("delta_mod must be > 0")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    x = epsilon / delta_mod
    if x == 0.0:
        out = np.zeros(max_order + 1)
        out[0] = 1.0
        return out
    sign = 1.0
    if x < 0:
        # J_n(-x) = (-1)^n J_n(x); handled after the positive-x recurrence
        sign = -1.0
        x = -x
    start = max(max_order, int(math.ceil(x))) + 20 + int(2.0 * math.sqrt(max(max_order, x)))
    b_next = 0.0
    b_curr = 1e-300
    values = np.zeros(start + 1)
    values[start] = b_curr
    for n in range(start, 0, -1):
        b_prev = (2.0 * n / x) * b_curr - b_next
        b_next = b_curr
        b_curr = b_prev
        if n - 1 <= start:
            values[n - 1] = b_curr
        if abs(b_curr) > 1e250:
            values[n - 1 :] /= 1e250
            b_curr /= 1e250
            b_next /= 1e250
    norm = values[0] + 2.0 * np.sum(values[2::2])
    values = values / norm
    out = values[: max_order + 1].copy()
    if sign < 0:
        out *= (-1.0) ** np.arange(max_order + 1)
    return out


def _bessel_j(order: int, epsilon: float, delta_mod: float) -> float:
    """J_n for possibly negative order, via J_{-n} = (-1)^n J_n."""
    n = abs(order)
    value = bessel_weights(epsilon, delta_mod, n)[n]
    if order < 0 and n % 2 == 1:
        value = -value
    return float(value)


def auto_truncation(epsilon: float, delta_mod: float, minimum: int = 2) -> int:
    """Smallest order N >= minimum with |J_{N+1}(epsilon/delta_mod)| < 1e-3."""
    n = minimum
    while abs(_bessel_j(n + 1, epsilon, delta_mod)) >= _TRUNCATION_WEIGHT:
        n += 1
        if n > 60:
            raise ValueError("modulation index too large for a practical truncation")
    return n


@dataclass(frozen=True)
class BlockMatrix:
    """Assembled coupled-mode matrix at one probe frequency.

    ``order`` is the truncation N; ``matrix`` is the dense
    3(2N+1) x 3(2N+1) array with sideband blocks ordered -N .. +N.
    """

    order: int
    matrix: np.ndarray = field(repr=False)

    def block(self, row_order: int, col_order: int) -> np.ndarray:
        """3x3 sub-matrix coupling sideband orders (row_order, col_order)."""
        n = self.order
        if abs(row_order) > n or abs(col_order) > n:
            raise IndexError("sideband order outside the truncation")
        i = 3 * (row_order + n)
        j = 3 * (col_order + n)
        return self.matrix[i : i + 3, j : j + 3]

    @property
    def center_cavity_index(self) -> int:
        """Flat index of the filter-cavity baseband amplitude."""
        return 3 * self.order + 2


def coupling_block(m: SidebandModel, k: int) -> np.ndarray:
    """Order-k inter-sideband coupling block G_k (Hermitian for k >= 1).

    Emitter and cavity rows carry (-i)^k J_k, the coupler row (+i)^k J_k,
    per the mode-resolved Jacobi-Anger expansion.
    """
    if k < 1:
        raise ValueError("coupling blocks are defined for k >= 1")
    jk = _bessel_j(k, m.epsilon, m.delta_mod)
    phase_ec_row = (-1j) ** k
    phase_c_row = (1j) ** k
    block = np.zeros((3, 3), dtype=complex)
    block[0, 1] = -m.g_ec * phase_ec_row * jk
    block[2, 1] = -m.g_cr * phase_ec_row * jk
    block[1, 0] = -m.g_ec * phase_c_row * jk
    block[1, 2] = -m.g_cr * phase_c_row * jk
    return block


def build_blocks(m: SidebandModel, omega: float) -> BlockMatrix:
    """Assemble the sideband block matrix at probe frequency omega (rad/s).

    Diagonal blocks H_n carry the detunings Delta_{i,n} = omega - omega_i +
    n*Delta plus i/2 loss terms and the J_0-weighted intra-order couplings;
    blocks at distance k are :func:`coupling_block` above the diagonal and
    their conjugate transposes below (equal to them, being Hermitian).
    """
    n = m.truncation_order()
    x_orders = range(-n, n + 1)
    j0 = _bessel_j(0, m.epsilon, m.delta_mod)
    coupling_pattern = np.array(
        [
            [0.0, m.g_ec, 0.0],
            [m.g_ec, 0.0, m.g_cr],
            [0.0, m.g_cr, 0.0],
        ],
        dtype=complex,
    )
    size = 3 * (2 * n + 1)
    matrix = np.zeros((size, size), dtype=complex)
    loss_diag = np.diag(
        [1j * m.gamma_e / 2.0, 1j * m.gamma_c / 2.0, 1j * m.kappa_t / 2.0]
    )
    blocks = {k: coupling_block(m, k) for k in range(1, 2 * n + 1)} if n else {}
    for p in x_orders:
        i = 3 * (p + n)
        detunings = np.diag(
            [
                omega - m.omega_e + p * m.delta_mod,
                omega - m.omega_c + p * m.delta_mod,
                omega - m.omega_r + p * m.delta_mod,
            ]
        ).astype(complex)
        matrix[i : i + 3, i : i + 3] = detunings + loss_diag - j0 * coupling_pattern
        for q in x_orders:
            if q <= p:
                continue
            g_k = blocks[q - p]
            j = 3 * (q + n)
            matrix[i : i + 3, j : j + 3] = g_k
            matrix[j : j + 3, i : i + 3] = g_k.conj().T
    return BlockMatrix(n, matrix)


def cmt_transmission(m: SidebandModel, omega_grid: np.ndarray) -> SpectrumTrace:
    """Waveguide transmission of the modulated three-mode system.

    Solves the block-matrix equation per frequency with the drive applied at
    the filter-cavity baseband only.  A singular matrix at a grid point
    yields NaN there rather than failing the sweep.
    """
    omegas = np.asarray(omega_grid, dtype=float)
    t = np.empty(omegas.shape, dtype=complex)
    for i, omega in enumerate(omegas):
        bm = build_blocks(m, omega)
        idx = bm.center_cavity_index
        rhs = np.zeros(bm.matrix.shape[0], dtype=complex)
        rhs[idx] = 1j * math.sqrt(m.kappa_e / 2.0)
        try:
            amplitudes = np.linalg.solve(bm.matrix, rhs)
            t[i] = 1.0 - math.sqrt(m.kappa_e / 2.0) * amplitudes[idx]
        except np.linalg.LinAlgError:
            t[i] = np.nan
    return SpectrumTrace(omegas / TWO_PI, t)


@dataclass(frozen=True)
class RegimeEstimate:
    """Effective-coupling estimate for one decay pathway E_n -> C_m -> R_0."""

    regime: str
    g_eff: float
    kappa_em: float
    participation: dict[str, float]
    reliable: bool = True
    notes: tuple[str, ...] = ()


def _hybrid_mode(m: SidebandModel, mm: int) -> tuple[float, float, float]:
    """Majority-coupler eigenmode of the (C_m, R_0) pair: (omega_h, zeta, xi)."""
    coupling = m.g_cr * _bessel_j(mm, m.epsilon, m.delta_mod)
    omega_cm = m.omega_c + mm * m.delta_mod
    two_by_two = np.array([[omega_cm, coupling], [coupling, m.omega_r]])
    evals, evecs = np.linalg.eigh(two_by_two)
    majority = int(np.argmax(np.abs(evecs[0, :])))
    return float(evals[majority]), float(evecs[0, majority]), float(evecs[1, majority])


def regime_estimate(m: SidebandModel, n: int, mm: int, regime: str) -> RegimeEstimate:
    """Effective emitter-waveguide coupling through the C_m sideband.

    ``n`` and ``mm`` are the emitter and coupler sideband orders of the decay
    pathway.  Estimates outside their stated detuning hierarchies are still
    returned but flagged unreliable.  The fully hybridized estimate uses the
    filter-cavity participation of the dressed emitter mode obtained from
    the exact three-mode diagonalization.
    """
    if regime not in _REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {_REGIMES}")
    j_mn = _bessel_j(mm - n, m.epsilon, m.delta_mod)
    j_m = _bessel_j(mm, m.epsilon, m.delta_mod)
    omega_en = m.omega_e + n * m.delta_mod
    omega_cm = m.omega_c + mm * m.delta_mod
    notes: list[str] = []

    if regime == DISPERSIVE:
        delta_cm_en = omega_cm - omega_en
        delta_cm_r = omega_cm - m.omega_r
        delta_en_r = omega_en - m.omega_r
        if min(abs(delta_cm_en), abs(delta_cm_r)) == 0:
            g_eff = math.inf
            notes.append("coupler degenerate with emitter or cavity sideband")
        else:
            g_eff = (
                m.g_ec * m.g_cr / 2.0 * j_mn * j_m * (1.0 / delta_cm_en + 1.0 / delta_cm_r)
            )
        if delta_en_r == 0 or not math.isfinite(g_eff):
            kappa_em = math.inf
            notes.append("emitter degenerate with the cavity: estimate diverges")
            return RegimeEstimate(
                regime,
                float(g_eff),
                kappa_em,
                {"j_weight_cross": j_mn, "j_weight_direct": j_m},
                reliable=False,
                notes=tuple(notes),
            )
        kappa_em = (g_eff / delta_en_r) ** 2 * m.kappa_e
        for label, detuning, coupling in (
            ("coupler-emitter", delta_cm_en, m.g_ec * abs(j_mn)),
            ("coupler-cavity", delta_cm_r, m.g_cr * abs(j_m)),
            ("emitter-cavity", delta_en_r, abs(g_eff)),
        ):
            if abs(detuning) < 5.0 * coupling:
                notes.append(f"{label} detuning not dispersive: |{detuning:.4g}| < 5*{coupling:.4g}")
        return RegimeEstimate(
            regime,
            float(g_eff),
            float(kappa_em),
            {"j_weight_cross": j_mn, "j_weight_direct": j_m},
            reliable=not notes,
            notes=tuple(notes),
        )

    omega_h, zeta, xi = _hybrid_mode(m, mm)
    coupler_fraction = zeta**2 / (zeta**2 + xi**2)
    cavity_fraction = xi**2 / (zeta**2 + xi**2)
    g_eff = m.g_ec * j_mn * coupler_fraction
    delta_en_h = omega_en - omega_h

    if regime == HYBRIDIZED_CAVITY:
        if delta_en_h == 0:
            raise ZeroDivisionError("emitter degenerate with the hybridized mode")
        kappa_em = (g_eff / delta_en_h) ** 2 * cavity_fraction * m.kappa_e
        if abs(delta_en_h) < 5.0 * abs(g_eff):
            notes.append(
                f"emitter-hybrid detuning not dispersive: |{delta_en_h:.4g}| < 5*{abs(g_eff):.4g}"
            )
        return RegimeEstimate(
            regime,
            float(g_eff),
            float(kappa_em),
            {"zeta": zeta, "xi": xi, "omega_h": omega_h},
            reliable=not notes,
            notes=tuple(notes),
        )

    # fully hybridized: dressed emitter mode of the three-mode ladder
    ladder = np.array(
        [
            [omega_en, m.g_ec * j_mn, 0.0],
            [m.g_ec * j_mn, omega_cm, m.g_cr * j_m],
            [0.0, m.g_cr * j_m, m.omega_r],
        ]
    )
    evals, evecs = np.linalg.eigh(ladder)
    majority = int(np.argmax(np.abs(evecs[0, :])))
    c_e, c_c, c_r = evecs[:, majority]
    hybrid_weight = c_c**2 + c_r**2
    alpha = math.sqrt(hybrid_weight) / abs(c_e)
    kappa_em = (alpha**2 / (1.0 + alpha**2)) * (
        c_r**2 / hybrid_weight if hybrid_weight > 0 else 0.0
    ) * m.kappa_e
    if alpha >= 1.0:
        notes.append(f"emitter participation alpha = {alpha:.3g} is not small")
    return RegimeEstimate(
        regime,
        float(g_eff),
        float(kappa_em),
        {"alpha": alpha, "zeta": zeta, "xi": xi, "omega_h": omega_h},
        reliable=not notes,
        notes=tuple(notes),
    )


def coupler_drive_calibration(
    flux: np.ndarray,
    omega_c: np.ndarray,
    phi_dc: float,
    epsilon_phi: float,
) -> tuple[float, float]:
    """Mean coupler frequency and modulation amplitude from the tuning curve.

    Taylor expansion of the tabulated omega_C(Phi) about the DC bias point:
    the modulation amplitude is epsilon = epsilon_Phi * domega/dPhi and the
    mean frequency is shifted by (epsilon_Phi^2 / 4) * domega/dPhi, exactly
    as printed in the source derivation (a second derivative would be
    dimensionally expected in the shift term; the printed first-derivative
    form is implemented deliberately).  The derivative is a centered finite
    difference at the tabulated node nearest phi_dc.
    """
    phi = np.asarray(flux, dtype=float)
    omega = np.asarray(omega_c, dtype=float)
    if phi.ndim != 1 or phi.shape != omega.shape or phi.size < 3:
        raise ValueError("tuning curve needs matching 1-d arrays of length >= 3")
    if np.any(np.diff(phi) <= 0):
        raise ValueError("flux samples must be strictly increasing")
    if not (phi[1] <= phi_dc <= phi[-2]):
        raise ValueError(
            f"phi_dc = {phi_dc:.6g} outside the interior tabulated range "
            f"[{phi[1]:.6g}, {phi[-2]:.6g}]"
        )
    idx = int(np.argmin(np.abs(phi - phi_dc)))
    idx = min(max(idx, 1), phi.size - 2)
    slope = (omega[idx + 1] - omega[idx - 1]) / (phi[idx + 1] - phi[idx - 1])
    omega_at_dc = float(np.interp(phi_dc, phi, omega))
    omega_bar = omega_at_dc + (epsilon_phi**2 / 4.0) * slope
    epsilon = epsilon_phi * slope
    return omega_bar, epsilon
