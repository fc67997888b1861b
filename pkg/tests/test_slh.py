import math

import numpy as np
import pytest

from chiralatom.core import ChiralCoupling, AtomRates, rates_from_coupling
from chiralatom.slh import (
    DegenerateResonanceError,
    DriveField,
    IDENTITY2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    SlhTriplet,
    WindingUndefinedError,
    build_chiral_atom,
    concat,
    identity_triplet,
    is_hermitian,
    is_unitary,
    phase_winding,
    series,
    weak_transmission,
    weak_transmission_slh,
)
from chiralatom.spectra import SpectrumTrace

TWO_PI = 2 * math.pi


def random_triplet(rng, n_ports=1, dim=2):
    # random unitary via QR
    z = rng.standard_normal((n_ports, n_ports)) + 1j * rng.standard_normal((n_ports, n_ports))
    q, r = np.linalg.qr(z)
    s = q * (np.diag(r) / np.abs(np.diag(r)))
    ops = tuple(
        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        for _ in range(n_ports)
    )
    h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = (h + h.conj().T) / 2
    return SlhTriplet(s, ops, h)


def triplets_close(a, b, tol=1e-12):
    if np.abs(a.s - b.s).max() > tol:
        return False
    for la, lb in zip(a.l, b.l):
        if np.abs(la - lb).max() > tol:
            return False
    return np.abs(a.h - b.h).max() <= tol


class TestPauliBasis:
    def test_algebra(self):
        np.testing.assert_allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z)
        np.testing.assert_allclose((SIGMA_X + 1j * SIGMA_Y) / 2, SIGMA_PLUS)
        np.testing.assert_allclose((SIGMA_X - 1j * SIGMA_Y) / 2, SIGMA_MINUS)
        # ground state has negative sigma_z expectation
        assert SIGMA_Z[0, 0] == -1.0


class TestSeries:
    def test_identity_is_neutral(self):
        rng = np.random.default_rng(0)
        g = random_triplet(rng)
        ident = identity_triplet()
        assert triplets_close(series(ident, g), g)
        assert triplets_close(series(g, ident), g)

    def test_pure_phase_scattering(self):
        phase = np.exp(0.7j)
        g_phase = SlhTriplet(np.array([[phase]]), (np.zeros((2, 2)),), np.zeros((2, 2)))
        g_atom = SlhTriplet(np.eye(1), (0.3 * SIGMA_MINUS,), np.zeros((2, 2)))
        out = series(g_phase, g_atom)
        np.testing.assert_allclose(out.s, [[phase]])
        np.testing.assert_allclose(out.l[0], phase * 0.3 * SIGMA_MINUS)
        np.testing.assert_allclose(out.h, np.zeros((2, 2)), atol=1e-15)

    def test_forward_cascade_collapse_operator(self):
        # L_f = alpha e^{i phi_wg} + sqrt(k/2)(e^{i phi_wg} + e^{i phi_c}) sigma_-
        kappa, phi_c, phi_wg, alpha = 1.7, 0.9, 2.2, 0.31 + 0.12j
        amp = math.sqrt(kappa / 2)
        g_drive = SlhTriplet(np.eye(1), (alpha * IDENTITY2,), np.zeros((2, 2)))
        g_left = SlhTriplet(np.eye(1), (amp * SIGMA_MINUS,), np.zeros((2, 2)))
        g_wg = SlhTriplet(np.array([[np.exp(1j * phi_wg)]]), (np.zeros((2, 2)),), np.zeros((2, 2)))
        g_right = SlhTriplet(np.eye(1), (amp * np.exp(1j * phi_c) * SIGMA_MINUS,), np.zeros((2, 2)))
        forward = series(g_right, series(g_wg, series(g_left, g_drive)))
        expected = alpha * np.exp(1j * phi_wg) * IDENTITY2 + amp * (
            np.exp(1j * phi_wg) + np.exp(1j * phi_c)
        ) * SIGMA_MINUS
        np.testing.assert_allclose(forward.l[0], expected, atol=1e-14)

    def test_associativity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b, c = (random_triplet(rng) for _ in range(3))
            left = series(series(a, b), c)
            right = series(a, series(b, c))
            assert triplets_close(left, right, tol=1e-12 * 100)

    def test_composite_unitarity(self):
        rng = np.random.default_rng(2)
        for n_ports in (1, 2):
            a = random_triplet(rng, n_ports)
            b = random_triplet(rng, n_ports)
            assert is_unitary(series(a, b).s)
            assert is_unitary(concat(a, b).s, tol=1e-10)

    def test_dimension_mismatch(self):
        g1 = identity_triplet(1, 2)
        g2 = identity_triplet(2, 2)
        with pytest.raises(ValueError):
            series(g2, g1)
        g3 = identity_triplet(1, 3)
        with pytest.raises(ValueError):
            series(g3, g1)
        with pytest.raises(ValueError):
            concat(g1, g3)


class TestConcat:
    def test_two_identities(self):
        out = concat(identity_triplet(), identity_triplet())
        assert out.n_ports == 2
        np.testing.assert_allclose(out.s, np.eye(2))

    def test_hamiltonian_adds(self):
        rng = np.random.default_rng(3)
        a, b = random_triplet(rng), random_triplet(rng)
        np.testing.assert_allclose(concat(a, b).h, a.h + b.h, atol=1e-14)

    def test_chiral_atom_scattering_matrix(self):
        c = ChiralCoupling(1.0, 1.1, 0.6)
        g = build_chiral_atom(c, DriveField(0.1))
        np.testing.assert_allclose(g.s, np.exp(0.6j) * np.eye(2), atol=1e-14)


class TestBuildChiralAtom:
    def test_rabi_hamiltonian_at_chiral_point(self):
        kappa, alpha, detuning = 1.3, 0.21, 0.8
        c = ChiralCoupling(kappa, math.pi / 2, math.pi / 2)
        g = build_chiral_atom(c, DriveField(alpha, detuning))
        gamma_f = 2 * kappa
        omega_r = 2 * alpha * math.sqrt(gamma_f)
        expected = detuning / 2 * SIGMA_Z + omega_r / 2 * SIGMA_Y
        np.testing.assert_allclose(g.h, expected, atol=1e-13)

    def test_no_drive_leaves_detuning_only(self):
        for phi_c, phi_wg in [(math.pi / 2, math.pi / 2), (0.7, 1.9), (2.5, 0.3)]:
            g = build_chiral_atom(ChiralCoupling(1.5, phi_c, phi_wg), DriveField(0.0, 0.4))
            np.testing.assert_allclose(g.h, 0.2 * SIGMA_Z, atol=1e-13)

    def test_hamiltonian_matches_quoted_form(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            kappa = rng.uniform(0.1, 4)
            phi_c, phi_wg = rng.uniform(0, TWO_PI, 2)
            alpha = rng.uniform(0.05, 1.0) * np.exp(1j * rng.uniform(0, TWO_PI))
            detuning = rng.uniform(-3, 3)
            g = build_chiral_atom(ChiralCoupling(kappa, phi_c, phi_wg), DriveField(alpha, detuning))
            coeff = 1 + np.exp(1j * (phi_wg - phi_c))
            expected = detuning / 2 * SIGMA_Z - 1j * math.sqrt(kappa / 2) * (
                alpha * coeff * SIGMA_PLUS - np.conj(alpha * coeff) * SIGMA_MINUS
            )
            np.testing.assert_allclose(g.h, expected, atol=1e-12)
            assert is_hermitian(g.h)

    def test_backward_collapse_nulls_at_interference_condition(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            phi_wg = rng.uniform(0.1, TWO_PI - 0.1)
            c = ChiralCoupling(2.0, math.pi - phi_wg, phi_wg)
            g = build_chiral_atom(c, DriveField(0.3))
            assert np.abs(g.l[1]).max() < 1e-12


class TestWeakTransmission:
    def test_ideal_chiral_atom_resonance(self):
        c = ChiralCoupling(1.0, math.pi / 2, math.pi / 2)
        rates = rates_from_coupling(c, gamma_prime=0.0)
        assert weak_transmission(c, rates, 0.0) == pytest.approx(-1.0)

    def test_symmetric_lossless_atom_resonance(self):
        c = ChiralCoupling(1.0, 0.0, 0.0)
        rates = rates_from_coupling(c, gamma_prime=0.0)
        assert weak_transmission(c, rates, 0.0) == pytest.approx(0.0, abs=1e-14)

    def test_invisible_atom(self):
        c = ChiralCoupling(1.0, 3 * math.pi / 2, math.pi / 2)
        rates = AtomRates(0.0, 2.0, 0.1)
        for delta in np.linspace(-5, 5, 11):
            assert weak_transmission(c, rates, delta) == pytest.approx(1.0)

    def test_degenerate_resonance_error(self):
        c = ChiralCoupling(0.0, 0.5, math.pi)
        with pytest.raises(DegenerateResonanceError):
            weak_transmission(c, AtomRates(0.0, 0.0, 0.0), 0.0)

    def test_far_detuned_limit(self):
        c = ChiralCoupling(1.0, math.pi / 2, math.pi / 2)
        rates = rates_from_coupling(c, 0.3)
        assert abs(weak_transmission(c, rates, 1e6) - 1.0) < 1e-5

    def test_propagation_phase_option(self):
        c = ChiralCoupling(1.0, 1.0, 0.9)
        rates = rates_from_coupling(c, 0.2)
        raw = weak_transmission(c, rates, 0.7, include_propagation_phase=True)
        stripped = weak_transmission(c, rates, 0.7)
        assert raw == pytest.approx(stripped * np.exp(0.9j))

    def test_complex_plane_circle(self):
        c = ChiralCoupling(1.0, math.pi / 2, math.pi / 2)
        rates = rates_from_coupling(c, 0.5)
        deltas = np.linspace(-400, 400, 40001)
        t = weak_transmission(c, rates, deltas)
        diameter = rates.gamma_f / (rates.gamma_tot / 2)
        center = 1 - diameter / 2
        radii = np.abs(t - center)
        assert radii.max() == pytest.approx(diameter / 2, rel=1e-3)
        assert radii.min() == pytest.approx(diameter / 2, rel=1e-3)


class TestSlhRouteCrossCheck:
    def test_matches_closed_form(self):
        rng = np.random.default_rng(6)
        deltas = np.linspace(-15, 15, 201)
        for _ in range(10):
            c = ChiralCoupling(rng.uniform(0.1, 3), rng.uniform(0, TWO_PI), rng.uniform(0, TWO_PI))
            rates = rates_from_coupling(c, rng.uniform(0.01, 1.0))
            t_closed = weak_transmission(c, rates, deltas)
            t_slh = weak_transmission_slh(c, rates, deltas)
            assert np.max(np.abs(t_closed - t_slh) / np.abs(t_closed)) < 1e-10

    def test_raw_phase_agreement(self):
        c = ChiralCoupling(0.8, 2.1, 1.3)
        rates = rates_from_coupling(c, 0.15)
        t_closed = weak_transmission(c, rates, 0.4, include_propagation_phase=True)
        t_slh = weak_transmission_slh(c, rates, 0.4, include_propagation_phase=True)
        assert t_slh == pytest.approx(t_closed, rel=1e-12)


def synthetic_trace(gamma_f, gamma_b, gamma_prime, kappa=None, span_linewidths=60, points=4001):
    c = ChiralCoupling(1.0, math.pi / 2, math.pi / 2)
    rates = AtomRates(gamma_f, gamma_b, gamma_prime)
    f0 = 6.441e9
    half_span = span_linewidths * rates.gamma_tot / TWO_PI
    freqs = np.linspace(f0 - half_span, f0 + half_span, points)
    t = weak_transmission(c, rates, TWO_PI * (freqs - f0))
    return SpectrumTrace(freqs, t)


class TestPhaseWinding:
    def test_chiral_trace_winds_full_turn(self):
        trace = synthetic_trace(TWO_PI * 2.5e6, TWO_PI * 0.05e6, TWO_PI * 0.2e6)
        assert phase_winding(trace) == pytest.approx(TWO_PI, rel=0.05)

    def test_nonchiral_trace_stays_below_pi(self):
        trace = synthetic_trace(TWO_PI * 1.0e6, TWO_PI * 1.0e6, TWO_PI * 0.5e6)
        assert phase_winding(trace) <= math.pi + 1e-6

    def test_flat_trace(self):
        freqs = np.linspace(6.4e9, 6.5e9, 101)
        trace = SpectrumTrace(freqs, np.ones(101, dtype=complex))
        assert phase_winding(trace) == 0.0

    def test_insufficient_span_rejected(self):
        trace = synthetic_trace(TWO_PI * 2.5e6, 0.0, TWO_PI * 0.2e6, span_linewidths=3)
        with pytest.raises(WindingUndefinedError):
            phase_winding(trace)


class TestTripletValidation:
    def test_nonunitary_scattering_rejected(self):
        with pytest.raises(ValueError):
            SlhTriplet(np.array([[2.0]]), (np.zeros((2, 2)),), np.zeros((2, 2)))

    def test_nonhermitian_hamiltonian_rejected(self):
        with pytest.raises(ValueError):
            SlhTriplet(np.eye(1), (np.zeros((2, 2)),), SIGMA_MINUS)

    def test_port_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            SlhTriplet(np.eye(2), (np.zeros((2, 2)),), np.zeros((2, 2)))
