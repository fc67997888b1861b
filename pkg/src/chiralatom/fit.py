"""Resonance fitting and directionality statistics.

Two complementary extraction routes for the weak-drive lineshape

    t(f) = 1 - gamma_1d * exp(i*phi_f) / (i*2*pi*(f - f0) + gamma_tot/2)

are provided: a Levenberg-Marquardt fit of the full complex model (with an
optional complex affine background) and the algebraic circle-fit method,
which needs no initial conditions and is preferred for strongly coupled
traces.  Directionality confidence intervals treat the fitted forward and
backward rates as independent normals (non-central normal ratio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats
from sklearn.base import BaseEstimator

from .core import ChiralCoupling, decay_rates
from .spectra import SpectrumTrace

TWO_PI = 2.0 * math.pi


class FitConvergenceError(RuntimeError):
    """Raised when the optimizer exhausts its iteration budget."""


class DegenerateTraceError(ValueError):
    """Raised when a trace cannot support the requested fit."""


@dataclass(frozen=True)
class FitResult:
    """Fitted resonance parameters with 1-sigma uncertainties.

    Rates are angular (rad/s); f0 is in Hz.  ``covariance`` is the parameter
    covariance in the order (gamma_1d, gamma_tot, f0, phi_fano, ...).
    """

    gamma_1d: float
    gamma_1d_sigma: float
    gamma_tot: float
    gamma_tot_sigma: float
    f0: float
    f0_sigma: float
    phi_fano: float
    phi_fano_sigma: float
    residual_rms: float
    covariance: np.ndarray = field(repr=False)

    @property
    def physical(self) -> bool:
        """Whether gamma_tot >= gamma_1d * cos(phi_fano) holds."""
        return self.gamma_tot >= self.gamma_1d * math.cos(self.phi_fano)


@dataclass(frozen=True)
class DirectionalityBound:
    """Directionality ratio with a confidence interval.

    ``ci_high`` is +inf when the backward rate is consistent with zero.
    """

    eta_d: float
    ci_low: float
    ci_high: float
    method: str
    level: float = 0.95


def _scaled_normal_inverse(jac: np.ndarray) -> np.ndarray:
    """(J^T J)^-1 with column scaling to tame disparate parameter units."""
    norms = np.linalg.norm(jac, axis=0)
    norms[norms == 0] = 1.0
    scaled = jac / norms
    inv = np.linalg.pinv(scaled.T @ scaled)
    return inv / np.outer(norms, norms)


def _fano_model(freqs, gamma_1d, gamma_tot, f0, phi_f, background=None):
    delta = TWO_PI * (freqs - f0)
    t = 1.0 - gamma_1d * np.exp(1j * phi_f) / (1j * delta + gamma_tot / 2.0)
    if background is not None:
        a, b = background
        t = t + a + b * delta
    return t


def _initial_guess(trace: SpectrumTrace) -> tuple[float, float, float, float]:
    contrast = trace.contrast
    peak = int(np.argmax(contrast))
    f0 = float(trace.freqs[peak])
    power = contrast**2
    half = power[peak] / 2.0
    above = power >= half
    lo = trace.freqs[above][0]
    hi = trace.freqs[above][-1]
    gamma_tot = max(TWO_PI * (hi - lo), TWO_PI * float(np.diff(trace.freqs).min()))
    gamma_1d = float(contrast[peak]) * gamma_tot / 2.0
    phi_f = float(np.angle(1.0 - trace.t[peak]))
    return gamma_1d, gamma_tot, f0, phi_f


def fit_fano(
    trace: SpectrumTrace,
    init: FitResult | None = None,
    background: bool = False,
    max_iterations: int = 200,
) -> FitResult:
    """Nonlinear least squares of the Fano-generalized lineshape.

    Stacked real/imaginary residuals are minimized with Levenberg-Marquardt
    and the analytic Jacobian; when the trace carries a known noise sigma
    the residuals are whitened and the covariance is taken directly from
    the Jacobian, otherwise it is scaled by the residual variance.
    """
    freqs = trace.freqs
    data = trace.t
    if init is not None:
        x0 = [init.gamma_1d, init.gamma_tot, init.f0, init.phi_fano]
    else:
        x0 = list(_initial_guess(trace))
    if background:
        x0 += [0.0, 0.0, 0.0, 0.0]
    n_par = len(x0)

    scale = float(np.mean(freqs))
    weight = 1.0
    if trace.noise_sigma is not None:
        sigma = np.broadcast_to(np.asarray(trace.noise_sigma, float), freqs.shape)
        # per-quadrature sigma of complex-gaussian noise with E|n|^2 = sigma^2
        weight = 1.0 / np.maximum(sigma / math.sqrt(2.0), 1e-300)

    def residuals(x):
        bg = (x[4] + 1j * x[5], x[6] + 1j * x[7]) if background else None
        model = _fano_model(freqs, x[0], x[1], x[2], x[3], bg)
        r = (model - data) * weight
        return np.concatenate([r.real, r.imag])

    def jacobian(x):
        gamma_1d, gamma_tot, f0, phi_f = x[:4]
        delta = TWO_PI * (freqs - f0)
        denom = 1j * delta + gamma_tot / 2.0
        phase = np.exp(1j * phi_f)
        cols = [
            -phase / denom,
            gamma_1d * phase / (2.0 * denom**2),
            -TWO_PI * 1j * gamma_1d * phase / denom**2,
            -1j * gamma_1d * phase / denom,
        ]
        if background:
            one = np.ones_like(delta, dtype=complex)
            cols += [one, 1j * one, delta + 0j, 1j * delta]
        jac = np.empty((2 * freqs.size, len(cols)))
        for k, col in enumerate(cols):
            col = col * weight
            jac[: freqs.size, k] = col.real
            jac[freqs.size :, k] = col.imag
        return jac

    result = optimize.least_squares(
        residuals,
        np.asarray(x0, dtype=float),
        jac=jacobian,
        method="lm",
        xtol=1e-10,
        ftol=1e-10,
        gtol=1e-12,
        max_nfev=max_iterations * (n_par + 1),
        x_scale=[max(abs(x0[0]), 1.0), max(abs(x0[1]), 1.0), scale, 1.0]
        + ([1.0] * 4 if background else []),
    )
    if not result.success:
        raise FitConvergenceError(
            f"Fano fit did not converge after {max_iterations} iterations: "
            f"{result.message}; best parameters {result.x}, cost {result.cost:.3e}"
        )

    jac = result.jac
    dof = max(jac.shape[0] - n_par, 1)
    jtj_inv = _scaled_normal_inverse(jac)
    if trace.noise_sigma is not None:
        cov = jtj_inv
    else:
        cov = jtj_inv * (2.0 * result.cost / dof)
    sig = np.sqrt(np.maximum(np.diag(cov), 0.0))
    model = _fano_model(
        freqs,
        *result.x[:4],
        (result.x[4] + 1j * result.x[5], result.x[6] + 1j * result.x[7])
        if background
        else None,
    )
    rms = float(np.sqrt(np.mean(np.abs(model - data) ** 2)))
    return FitResult(
        gamma_1d=float(result.x[0]),
        gamma_1d_sigma=float(sig[0]),
        gamma_tot=float(result.x[1]),
        gamma_tot_sigma=float(sig[1]),
        f0=float(result.x[2]),
        f0_sigma=float(sig[2]),
        phi_fano=float(result.x[3]),
        phi_fano_sigma=float(sig[3]),
        residual_rms=rms,
        covariance=cov,
    )


def _algebraic_circle(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares circle through the points; returns (xc, yc, r)."""
    a = np.column_stack([x, y, np.ones_like(x)])
    b = x**2 + y**2
    coeffs, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < 3:
        raise DegenerateTraceError("points are collinear; no circle fit possible")
    xc, yc = coeffs[0] / 2.0, coeffs[1] / 2.0
    r2 = coeffs[2] + xc**2 + yc**2
    if r2 <= 0:
        raise DegenerateTraceError("circle fit collapsed to a point")
    return float(xc), float(yc), float(math.sqrt(r2))


def circle_fit(trace: SpectrumTrace, scatter_ratio: float = 5.0) -> FitResult:
    """Resonance parameters from the circle traced by t in the complex plane.

    The trace is fit to a circle algebraically (no initial conditions), the
    total linewidth and center frequency follow from the phase-versus-
    frequency profile around the circle center, and the coupling rate is
    diameter * gamma_tot / 2.  Requires the circle diameter to exceed
    ``scatter_ratio`` times the radial scatter of the points.
    """
    x, y = trace.t.real, trace.t.imag
    xc, yc, radius = _algebraic_circle(x, y)
    center = xc + 1j * yc
    radial = np.abs(trace.t - center)
    scatter = float(np.sqrt(np.mean((radial - radius) ** 2)))
    if 2.0 * radius < scatter_ratio * scatter:
        raise DegenerateTraceError(
            f"circle diameter {2 * radius:.3g} below {scatter_ratio} x scatter {scatter:.3g}"
        )

    theta = np.unwrap(np.angle(trace.t - center))
    contrast = trace.contrast
    peak = int(np.argmax(contrast))
    f0_init = float(trace.freqs[peak])
    power = contrast**2
    above = power >= power[peak] / 2.0
    width = max(
        float(trace.freqs[above][-1] - trace.freqs[above][0]),
        float(np.diff(trace.freqs).min()),
    )
    gamma_init = TWO_PI * width

    def resid(p):
        theta0, f0, gamma_tot = p
        return theta0 - 2.0 * np.arctan(2.0 * TWO_PI * (trace.freqs - f0) / gamma_tot) - theta

    def jac(p):
        _, f0, gamma_tot = p
        u = 2.0 * TWO_PI * (trace.freqs - f0) / gamma_tot
        lorentz = 1.0 / (1.0 + u**2)
        cols = np.empty((trace.freqs.size, 3))
        cols[:, 0] = 1.0
        cols[:, 1] = 2.0 * lorentz * (2.0 * TWO_PI / gamma_tot)
        cols[:, 2] = 2.0 * lorentz * u / gamma_tot
        return cols

    p0 = np.array([float(np.mean(theta)), f0_init, gamma_init])
    result = optimize.least_squares(resid, p0, jac=jac, method="lm", xtol=1e-12)
    if not result.success:
        raise FitConvergenceError(f"phase fit failed: {result.message}")
    _, f0, gamma_tot = result.x
    gamma_tot = abs(float(gamma_tot))
    gamma_1d = radius * gamma_tot

    # covariance of the phase fit, scaled by its residual variance
    dof = max(trace.freqs.size - 3, 1)
    cov_phase = _scaled_normal_inverse(result.jac) * (2.0 * result.cost / dof)
    f0_sigma = float(math.sqrt(max(cov_phase[1, 1], 0.0)))
    gamma_tot_sigma = float(math.sqrt(max(cov_phase[2, 2], 0.0)))
    radius_sigma = scatter / math.sqrt(max(trace.freqs.size, 1))
    gamma_1d_sigma = math.sqrt(
        (gamma_tot * radius_sigma) ** 2 + (radius * gamma_tot_sigma) ** 2
    )

    offres = 1.0 - center
    phi_fano = float(np.angle(offres)) if abs(offres) > 0 else 0.0
    phi_fano_sigma = radius_sigma / max(abs(offres), 1e-300)

    cov = np.diag(
        [gamma_1d_sigma**2, gamma_tot_sigma**2, f0_sigma**2, phi_fano_sigma**2]
    )
    model = _fano_model(trace.freqs, gamma_1d, gamma_tot, f0, phi_fano)
    rms = float(np.sqrt(np.mean(np.abs(model - trace.t) ** 2)))
    return FitResult(
        gamma_1d=float(gamma_1d),
        gamma_1d_sigma=float(gamma_1d_sigma),
        gamma_tot=gamma_tot,
        gamma_tot_sigma=gamma_tot_sigma,
        f0=float(f0),
        f0_sigma=f0_sigma,
        phi_fano=phi_fano,
        phi_fano_sigma=float(phi_fano_sigma),
        residual_rms=rms,
        covariance=cov,
    )


def directionality_ci(
    forward: FitResult, backward: FitResult, level: float = 0.95
) -> DirectionalityBound:
    """Confidence interval for gamma_f / gamma_b from two independent fits.

    The fitted rates are treated as independent normals and the interval is
    the Fieller set of the non-central normal ratio; when the backward
    estimate is within z*sigma of zero the upper bound is +inf and only the
    lower bound is meaningful.  Backward point estimates below zero are
    clamped to zero (conservative one-sided reporting).
    """
    if not (0.0 < level < 1.0):
        raise ValueError("confidence level must be in (0, 1)")
    mu_f, sigma_f = forward.gamma_1d, forward.gamma_1d_sigma
    mu_b, sigma_b = backward.gamma_1d, backward.gamma_1d_sigma
    if sigma_f <= 0 or sigma_b <= 0:
        raise ValueError("both fits must carry positive uncertainties")
    mu_b = max(mu_b, 0.0)
    z = float(stats.norm.ppf((1.0 + level) / 2.0))
    eta = mu_f / mu_b if mu_b > 0 else math.inf

    a = mu_b**2 - (z * sigma_b) ** 2
    b = -2.0 * mu_f * mu_b
    c = mu_f**2 - (z * sigma_f) ** 2
    disc = b**2 - 4.0 * a * c

    if a > 0:
        if disc < 0:
            raise RuntimeError("empty Fieller set; inconsistent inputs")
        root = math.sqrt(disc)
        lo = (-b - root) / (2.0 * a)
        hi = (-b + root) / (2.0 * a)
        return DirectionalityBound(eta, max(lo, 0.0), hi, "ratio-distribution", level)

    # backward rate consistent with zero: one-sided bound
    if c <= 0:
        return DirectionalityBound(eta, 0.0, math.inf, "ratio-distribution", level)
    if a == 0:
        lo = -c / b if b != 0 else 0.0
    else:
        root = math.sqrt(disc)
        candidates = [r for r in ((-b - root) / (2 * a), (-b + root) / (2 * a)) if r > 0]
        lo = min(candidates) if candidates else 0.0
    return DirectionalityBound(eta, max(lo, 0.0), math.inf, "ratio-distribution", level)


def phase_noise_bound(phase_variance: float, source: str = "single") -> float:
    """Directionality ceiling implied by parametric-drive phase noise.

    For the variance of the relative phase between the two drives the bound
    is 4 / variance; for a single independent source it is 2 / variance
    (two uncorrelated sources add).  Variances of 1 rad^2 or more are
    outside the small-fluctuation expansion and rejected.
    """
    if phase_variance <= 0:
        raise ValueError("phase variance must be > 0")
    if phase_variance >= 1.0:
        raise ValueError("variance >= 1 rad^2: small-fluctuation bound not meaningful")
    if source == "single":
        return 2.0 / phase_variance
    if source == "relative":
        return 4.0 / phase_variance
    raise ValueError(f"unknown source {source!r}; expected 'single' or 'relative'")


def exact_directionality_vs_phase(phi_c: float, phi_wg: float) -> float:
    """Forward/backward rate ratio at the given phases; inf when backward is 0.

    At phi_wg = pi/2 this reduces to (1 + sin(phi_c)) / (1 - sin(phi_c)).
    """
    gamma_f, gamma_b = decay_rates(ChiralCoupling(1.0, phi_c, phi_wg))
    if gamma_b == 0.0:
        return math.inf if gamma_f > 0 else 1.0
    return gamma_f / gamma_b


class FanoResonanceFitter(BaseEstimator):
    """Estimator-style wrapper around :func:`fit_fano`.

    fit(freqs, t) stores the :class:`FitResult` as ``result_``; predict
    evaluates the fitted model on a frequency grid.
    """

    def __init__(self, background: bool = False, max_iterations: int = 200):
        self.background = background
        self.max_iterations = max_iterations

    def fit(self, freqs, t, noise_sigma=None):
        trace = SpectrumTrace(np.asarray(freqs, float), np.asarray(t, complex), noise_sigma)
        self.result_ = fit_fano(
            trace, background=self.background, max_iterations=self.max_iterations
        )
        return self

    def predict(self, freqs):
        r = self.result_
        return _fano_model(np.asarray(freqs, float), r.gamma_1d, r.gamma_tot, r.f0, r.phi_fano)


class CircleResonanceFitter(BaseEstimator):
    """Estimator-style wrapper around :func:`circle_fit`."""

    def __init__(self, scatter_ratio: float = 5.0):
        self.scatter_ratio = scatter_ratio

    def fit(self, freqs, t):
        trace = SpectrumTrace(np.asarray(freqs, float), np.asarray(t, complex))
        self.result_ = circle_fit(trace, scatter_ratio=self.scatter_ratio)
        return self

    def predict(self, freqs):
        r = self.result_
        return _fano_model(np.asarray(freqs, float), r.gamma_1d, r.gamma_tot, r.f0, r.phi_fano)
