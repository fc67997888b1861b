"""Frequency-indexed trace containers shared by the simulation and fit layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid


@dataclass(frozen=True)
class SpectrumTrace:
    """Complex transmission sampled on a strictly increasing frequency grid.

    freqs:       probe frequency in Hz.
    t:           complex transmission coefficient per point.
    noise_sigma: optional per-point (or scalar) complex-Gaussian sigma, in the
                 convention E[|noise|^2] = sigma^2.
    """

    freqs: np.ndarray
    t: np.ndarray
    noise_sigma: float | np.ndarray | None = None

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        t = np.asarray(self.t, dtype=complex)
        if freqs.ndim != 1 or t.shape != freqs.shape:
            raise ValueError("freqs and t must be 1-d arrays of equal length")
        if freqs.size < 2:
            raise ValueError("a trace needs at least two points")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "t", t)

    def __len__(self) -> int:
        return self.freqs.size

    @property
    def contrast(self) -> np.ndarray:
        """|1 - t|, the departure of the trace from unit transmission."""
        return np.abs(1.0 - self.t)


@dataclass(frozen=True)
class PsdTrace:
    """Emission power spectral density over detuning from the carrier.

    delta_omega: detuning grid (rad/s); psd: one-sided spectral density in
    W per (rad/s), so the emitted power is the integral over delta_omega.
    """

    delta_omega: np.ndarray
    psd: np.ndarray

    def __post_init__(self):
        dw = np.asarray(self.delta_omega, dtype=float)
        psd = np.asarray(self.psd, dtype=float)
        if dw.ndim != 1 or psd.shape != dw.shape:
            raise ValueError("delta_omega and psd must be 1-d arrays of equal length")
        object.__setattr__(self, "delta_omega", dw)
        object.__setattr__(self, "psd", psd)

    def integrated_power(self) -> float:
        """Total incoherent emitted power by trapezoidal quadrature (W)."""
        return float(trapezoid(self.psd, self.delta_omega))
