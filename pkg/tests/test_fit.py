import math

import numpy as np
import pytest
from scipy import stats
from sklearn.base import clone

from chiralatom.core import decay_rates, ChiralCoupling
from chiralatom.fit import (
    CircleResonanceFitter,
    DegenerateTraceError,
    FanoResonanceFitter,
    FitResult,
    _fano_model,
    circle_fit,
    directionality_ci,
    exact_directionality_vs_phase,
    fit_fano,
    phase_noise_bound,
)
from chiralatom.spectra import SpectrumTrace

TWO_PI = 2 * math.pi
F0 = 6.441e9


def make_trace(gamma_1d, gamma_tot, f0=F0, phi_f=0.0, points=401, span=None, noise=0.0, seed=0):
    span = span if span is not None else 20 * gamma_tot / TWO_PI
    freqs = np.linspace(f0 - span / 2, f0 + span / 2, points)
    t = _fano_model(freqs, gamma_1d, gamma_tot, f0, phi_f)
    sigma = None
    if noise:
        rng = np.random.default_rng(seed)
        t = t + noise * (
            rng.standard_normal(points) + 1j * rng.standard_normal(points)
        ) / math.sqrt(2)
        sigma = noise
    return SpectrumTrace(freqs, t, sigma)


def result_with(gamma, sigma):
    return FitResult(gamma, sigma, 1.0, 0.1, F0, 1.0, 0.0, 0.0, 0.0, np.eye(4))


class TestFitFano:
    def test_noiseless_round_trip(self):
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.0e6
        res = fit_fano(make_trace(g1d, gtot))
        assert res.gamma_1d == pytest.approx(g1d, rel=1e-6)
        assert res.gamma_tot == pytest.approx(gtot, rel=1e-6)
        assert res.f0 == pytest.approx(F0, abs=1.0)
        assert res.phi_fano == pytest.approx(0.0, abs=1e-6)

    def test_round_trip_parameter_grid(self):
        for g1d_mhz in (0.5, 2.5, 6.0):
            for gtot_mhz in (1.0, 3.0, 8.0):
                for phi_f in (-0.5, 0.0, 0.7):
                    if g1d_mhz * math.cos(phi_f) > gtot_mhz:
                        continue
                    g1d, gtot = TWO_PI * g1d_mhz * 1e6, TWO_PI * gtot_mhz * 1e6
                    res = fit_fano(make_trace(g1d, gtot, phi_f=phi_f, points=801))
                    assert res.gamma_1d == pytest.approx(g1d, rel=1e-6)
                    assert res.gamma_tot == pytest.approx(gtot, rel=1e-6)
                    assert res.phi_fano == pytest.approx(phi_f, abs=1e-6)
                    assert abs(res.f0 - F0) < 1e-6 * F0

    def test_fano_phase_kills_real_part_on_resonance(self):
        g1d, gtot = TWO_PI * 1.5e6, TWO_PI * 3.0e6
        trace = make_trace(g1d, gtot, phi_f=math.pi / 2, points=801)
        res = fit_fano(trace)
        on_res = _fano_model(
            np.array([res.f0]), res.gamma_1d, res.gamma_tot, res.f0, res.phi_fano
        )[0]
        # external coupling goes as gamma_1d * cos(phi_f) = 0
        assert (1 - on_res).real == pytest.approx(0.0, abs=1e-9)
        assert res.phi_fano == pytest.approx(math.pi / 2, abs=1e-6)

    def test_noisy_recovery_within_two_percent(self):
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.0e6
        res = fit_fano(make_trace(g1d, gtot, noise=0.01, seed=42))
        assert res.gamma_1d == pytest.approx(g1d, rel=0.02)
        assert res.gamma_1d_sigma > 0

    def test_flat_trace_noiseless(self):
        freqs = np.linspace(F0 - 1e7, F0 + 1e7, 301)
        res = fit_fano(SpectrumTrace(freqs, np.ones(301, dtype=complex)))
        assert abs(res.gamma_1d) < 1e-6

    def test_flat_trace_noisy_consistent_with_zero(self):
        rng = np.random.default_rng(42)
        freqs = np.linspace(F0 - 1e7, F0 + 1e7, 401)
        noise = 1e-3 * (rng.standard_normal(401) + 1j * rng.standard_normal(401)) / math.sqrt(2)
        res = fit_fano(SpectrumTrace(freqs, 1.0 + noise, 1e-3))
        assert abs(res.gamma_1d) < 3 * res.gamma_1d_sigma

    def test_per_point_noise_sigma(self):
        # heteroscedastic noise: whitened residuals and direct covariance
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.0e6
        freqs = np.linspace(F0 - 3e7, F0 + 3e7, 401)
        sigma = np.full(freqs.size, 0.005)
        sigma[::2] = 0.02
        rng = np.random.default_rng(8)
        noise = sigma * (
            rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size)
        ) / math.sqrt(2)
        t = _fano_model(freqs, g1d, gtot, F0, 0.0) + noise
        res = fit_fano(SpectrumTrace(freqs, t, sigma))
        assert res.gamma_1d == pytest.approx(g1d, rel=0.02)
        assert res.gamma_1d_sigma > 0

    def test_background_option(self):
        g1d, gtot = TWO_PI * 2.0e6, TWO_PI * 3.0e6
        freqs = np.linspace(F0 - 3e7, F0 + 3e7, 801)
        delta = TWO_PI * (freqs - F0)
        t = _fano_model(freqs, g1d, gtot, F0, 0.0) + (0.02 - 0.01j) + 1e-11j * delta
        res = fit_fano(SpectrumTrace(freqs, t), background=True)
        assert res.gamma_1d == pytest.approx(g1d, rel=1e-6)

    def test_physical_flag(self):
        res = fit_fano(make_trace(TWO_PI * 2.5e6, TWO_PI * 3.0e6))
        assert res.physical
        impossible = FitResult(4.0, 0.1, 3.0, 0.1, F0, 1.0, 0.0, 0.1, 0.0, np.eye(4))
        assert not impossible.physical

    def test_nonconvergence_reports_diagnostics(self):
        from chiralatom.fit import FitConvergenceError

        trace = make_trace(TWO_PI * 2.5e6, TWO_PI * 3.0e6, noise=0.05, seed=9)
        far_off = FitResult(
            TWO_PI * 50e6, 0.1, TWO_PI * 0.1e6, 0.1, F0 + 25e6, 1.0, 2.5, 0.1, 0.0, np.eye(4)
        )
        with pytest.raises(FitConvergenceError, match="best parameters"):
            fit_fano(trace, init=far_off, max_iterations=1)


class TestCircleFit:
    def test_ideal_chiral_circle(self):
        g1d = TWO_PI * 2.5e6
        trace = make_trace(g1d, g1d, points=801, span=60 * g1d / TWO_PI)
        res = circle_fit(trace)
        assert res.gamma_1d == pytest.approx(g1d, rel=1e-4)
        assert res.gamma_tot == pytest.approx(g1d, rel=1e-4)
        # circle passes through +1 and -1: diameter 2 on the real axis
        t = trace.t
        assert t.real.min() == pytest.approx(-1.0, abs=1e-3)
        assert t.real.max() == pytest.approx(1.0, abs=1e-3)

    def test_noisy_recovery_within_two_percent(self):
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.0e6
        errors = []
        for seed in range(25):
            trace = make_trace(g1d, gtot, points=401, noise=0.01, seed=seed)
            res = circle_fit(trace)
            errors.append(abs(res.gamma_1d - g1d) / g1d)
        assert max(errors) < 0.02

    def test_semicircle_span_center_unbiased(self):
        # sweep covering roughly half the circle: gamma_tot uncertainty grows
        # but the coupling estimate stays unbiased
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.0e6
        narrow = gtot / TWO_PI  # about one linewidth each side
        estimates, sigmas = [], []
        for seed in range(40):
            trace = make_trace(g1d, gtot, points=201, span=2 * narrow, noise=0.005, seed=seed)
            res = circle_fit(trace)
            estimates.append(res.gamma_1d)
            sigmas.append(res.gamma_1d_sigma)
        bias = np.mean(estimates) - g1d
        standard_error = np.std(estimates) / math.sqrt(len(estimates))
        assert abs(bias) < 3 * standard_error + 0.01 * g1d

    def test_collinear_points_rejected(self):
        freqs = np.linspace(F0 - 1e6, F0 + 1e6, 50)
        t = np.linspace(0.2, 0.8, 50) + 0j  # straight segment on the real axis
        with pytest.raises(DegenerateTraceError):
            circle_fit(SpectrumTrace(freqs, t))

    def test_scatter_dominated_trace_rejected(self):
        rng = np.random.default_rng(1)
        freqs = np.linspace(F0 - 1e7, F0 + 1e7, 200)
        t = 1.0 + 0.05 * (rng.standard_normal(200) + 1j * rng.standard_normal(200))
        with pytest.raises(DegenerateTraceError):
            circle_fit(SpectrumTrace(freqs, t))

    def test_agrees_with_fano_within_mutual_sigma(self):
        g1d, gtot = TWO_PI * 2.5e6, TWO_PI * 3.2e6
        agree = 0
        for seed in range(100):
            trace = make_trace(g1d, gtot, points=401, noise=0.01, seed=seed)
            res_f = fit_fano(trace)
            res_c = circle_fit(trace)
            if abs(res_f.gamma_1d - res_c.gamma_1d) <= res_f.gamma_1d_sigma + res_c.gamma_1d_sigma:
                agree += 1
        assert agree >= 90


class TestDirectionalityCi:
    def test_matches_monte_carlo_ratio_sampling(self):
        mu_f, s_f = TWO_PI * 2.5e6, TWO_PI * 0.05e6
        mu_b, s_b = TWO_PI * 0.025e6, TWO_PI * 0.005e6
        bound = directionality_ci(result_with(mu_f, s_f), result_with(mu_b, s_b))
        assert bound.eta_d == pytest.approx(100.0)
        rng = np.random.default_rng(123)
        samples = rng.normal(mu_f, s_f, 10**6) / rng.normal(mu_b, s_b, 10**6)
        lo_mc, hi_mc = np.quantile(samples, [0.025, 0.975])
        assert bound.ci_low == pytest.approx(lo_mc, rel=0.05)
        assert bound.ci_high == pytest.approx(hi_mc, rel=0.05)
        assert bound.ci_low <= bound.eta_d <= bound.ci_high

    def test_delta_method_limit(self):
        mu_f, s_f = 10.0, 0.2
        mu_b = 2.0
        bound = directionality_ci(result_with(mu_f, s_f), result_with(mu_b, 1e-12))
        eta = mu_f / mu_b
        z = stats.norm.ppf(0.975)
        sigma_eta = s_f / mu_b
        assert bound.ci_low == pytest.approx(eta - z * sigma_eta, rel=1e-6)
        assert bound.ci_high == pytest.approx(eta + z * sigma_eta, rel=1e-6)

    def test_backward_consistent_with_zero_one_sided(self):
        mu_f, s_f = TWO_PI * 2.5e6, TWO_PI * 0.05e6
        s_b = TWO_PI * 0.005e6
        bound = directionality_ci(result_with(mu_f, s_f), result_with(0.0, s_b))
        z = stats.norm.ppf(0.975)
        assert bound.ci_high == math.inf
        assert bound.eta_d == math.inf
        assert bound.ci_low == pytest.approx(mu_f / (z * s_b), rel=0.01)
        # consistency with Monte-Carlo: the lower bound is conservative
        rng = np.random.default_rng(7)
        forward = rng.normal(mu_f, s_f, 10**6)
        backward = np.abs(rng.normal(0.0, s_b, 10**6))
        coverage = np.mean(forward / backward >= bound.ci_low)
        assert coverage > 0.94

    def test_negative_backward_clamped(self):
        bound = directionality_ci(result_with(10.0, 0.1), result_with(-0.5, 1.0))
        assert bound.eta_d == math.inf
        assert bound.ci_high == math.inf

    def test_level_parameter(self):
        b95 = directionality_ci(result_with(10.0, 0.5), result_with(1.0, 0.05), level=0.95)
        b99 = directionality_ci(result_with(10.0, 0.5), result_with(1.0, 0.05), level=0.99)
        assert b99.ci_low < b95.ci_low
        assert b99.ci_high > b95.ci_high

    def test_requires_positive_sigmas(self):
        with pytest.raises(ValueError):
            directionality_ci(result_with(1.0, 0.0), result_with(1.0, 0.1))


class TestPhaseNoiseBound:
    def test_single_source_paper_value(self):
        variance = 4.9 * (math.pi / 180.0) ** 2
        assert phase_noise_bound(variance) == pytest.approx(1.3e3, rel=0.05)

    def test_relative_phase_paper_value(self):
        assert phase_noise_bound(3e-3, "relative") == pytest.approx(1.33e3, rel=0.01)

    def test_monotone_divergence(self):
        values = [phase_noise_bound(v, "relative") for v in (1e-2, 1e-3, 1e-4)]
        assert values[0] < values[1] < values[2]

    def test_rejects_large_variance(self):
        with pytest.raises(ValueError):
            phase_noise_bound(1.0)
        with pytest.raises(ValueError):
            phase_noise_bound(-0.1)
        with pytest.raises(ValueError):
            phase_noise_bound(0.01, "sideways")


class TestExactDirectionality:
    def test_perfect_chirality(self):
        assert exact_directionality_vs_phase(math.pi / 2, math.pi / 2) == math.inf

    def test_balanced(self):
        assert exact_directionality_vs_phase(0.0, math.pi / 2) == pytest.approx(1.0)

    def test_closed_form_at_quarter_wave(self):
        for phi_c in (0.3, 1.0, 2.0, 4.0):
            eta = exact_directionality_vs_phase(phi_c, math.pi / 2)
            expected = (1 + math.sin(phi_c)) / (1 - math.sin(phi_c))
            assert eta == pytest.approx(expected, rel=1e-12)

    def test_taylor_expansion(self):
        for delta in (1e-2, 1e-3, 1e-4):
            eta = exact_directionality_vs_phase(math.pi / 2 - delta, math.pi / 2)
            assert eta * delta**2 / 4 == pytest.approx(1.0, rel=5 * delta)

    def test_bound_matches_rate_averaged_ensemble(self):
        # mean forward and backward rates over a gaussian phase ensemble
        rng = np.random.default_rng(11)
        for variance in (1e-3, 1e-2):
            phases = rng.normal(math.pi / 2, math.sqrt(variance), 200000)
            rates = np.array(
                [decay_rates(ChiralCoupling(1.0, p, math.pi / 2)) for p in phases]
            )
            eta_ensemble = rates[:, 0].mean() / rates[:, 1].mean()
            assert phase_noise_bound(variance, "relative") == pytest.approx(
                eta_ensemble, rel=0.10
            )


class TestEstimatorWrappers:
    def test_fano_estimator(self):
        trace = make_trace(TWO_PI * 2.5e6, TWO_PI * 3.0e6, noise=0.01, seed=3)
        est = FanoResonanceFitter().fit(trace.freqs, trace.t, noise_sigma=0.01)
        assert est.result_.gamma_1d == pytest.approx(TWO_PI * 2.5e6, rel=0.02)
        prediction = est.predict(trace.freqs)
        residual_rms = np.sqrt(np.mean(np.abs(prediction - trace.t) ** 2))
        assert residual_rms == pytest.approx(0.01, rel=0.2)

    def test_circle_estimator(self):
        trace = make_trace(TWO_PI * 2.5e6, TWO_PI * 3.0e6)
        est = CircleResonanceFitter().fit(trace.freqs, trace.t)
        assert est.result_.gamma_1d == pytest.approx(TWO_PI * 2.5e6, rel=1e-4)

    def test_sklearn_protocol(self):
        est = FanoResonanceFitter(background=True, max_iterations=50)
        params = est.get_params()
        assert params == {"background": True, "max_iterations": 50}
        cloned = clone(est)
        assert cloned.get_params() == params
