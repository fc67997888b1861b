import numpy as np
import pytest

from chiralatom.spectra import PsdTrace, SpectrumTrace


class TestSpectrumTrace:
    def test_basic_construction(self):
        freqs = np.linspace(1.0, 2.0, 5)
        trace = SpectrumTrace(freqs, np.ones(5, dtype=complex))
        assert len(trace) == 5
        np.testing.assert_allclose(trace.contrast, 0.0)

    def test_requires_increasing_frequencies(self):
        with pytest.raises(ValueError):
            SpectrumTrace(np.array([1.0, 1.0, 2.0]), np.ones(3, dtype=complex))
        with pytest.raises(ValueError):
            SpectrumTrace(np.array([2.0, 1.0]), np.ones(2, dtype=complex))

    def test_requires_matching_lengths(self):
        with pytest.raises(ValueError):
            SpectrumTrace(np.array([1.0, 2.0]), np.ones(3, dtype=complex))

    def test_requires_two_points(self):
        with pytest.raises(ValueError):
            SpectrumTrace(np.array([1.0]), np.ones(1, dtype=complex))

    def test_contrast(self):
        trace = SpectrumTrace(np.array([1.0, 2.0]), np.array([1.0, 1.0 - 0.5j]))
        np.testing.assert_allclose(trace.contrast, [0.0, 0.5])


class TestPsdTrace:
    def test_integrated_power(self):
        grid = np.linspace(-50.0, 50.0, 200001)
        psd = PsdTrace(grid, 1.0 / (grid**2 + 1.0))
        assert psd.integrated_power() == pytest.approx(np.pi, rel=0.02)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            PsdTrace(np.array([1.0, 2.0]), np.array([1.0]))
