import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from ccfoe import spectral as sp
from ccfoe.errors import ConfigurationError, InputError
from ccfoe.waveform import DualPolSignal

import oracles


def _noise(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


class TestBlockPsd:
    def test_matches_dft_matrix(self):
        rng = np.random.default_rng(0)
        x, y = _noise(rng, 64), _noise(rng, 64)
        blk = sp.block_psd(x, y, 64, 64e9)
        want = oracles.dft_matrix_periodogram(x) + oracles.dft_matrix_periodogram(y)
        np.testing.assert_allclose(blk.bins, want, rtol=1e-10)
        assert blk.df_hz == 1e9

    def test_tone_lands_in_one_bin(self):
        n, fs = 256, 32e9
        f0 = 37 * fs / n
        x = np.exp(2j * np.pi * f0 * np.arange(n) / fs)
        blk = sp.block_psd(x, np.zeros(n), n, fs)
        k = int(np.argmax(blk.bins))
        assert blk.frequencies()[k] == pytest.approx(f0)
        assert blk.bins[k] == pytest.approx(n * n)
        assert np.sum(blk.bins) - blk.bins[k] < 1e-12 * n * n

    def test_frequency_grid(self):
        blk = sp.block_psd(np.zeros(8), np.zeros(8), 8, 8.0)
        np.testing.assert_array_equal(blk.frequencies(), np.arange(-4, 4))

    def test_zeros(self):
        blk = sp.block_psd(np.zeros(16), np.zeros(16), 16, 1.0)
        np.testing.assert_array_equal(blk.bins, 0.0)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            sp.block_psd(np.zeros(16), np.zeros(15), 16, 1.0)

    def test_not_power_of_two(self):
        with pytest.raises(ConfigurationError):
            sp.block_psd(np.zeros(12), np.zeros(12), 12, 1.0)

    def test_combining_halves_relative_variance(self):
        # exponential bins (1 pol) have var/mean^2 = 1; the sum of two has 1/2
        rng = np.random.default_rng(1)
        single, combined = [], []
        for _ in range(1000):
            x, y = _noise(rng, 64), _noise(rng, 64)
            single.append(sp.block_psd(x, np.zeros(64), 64, 1.0).bins)
            combined.append(sp.block_psd(x, y, 64, 1.0).bins)
        rel = lambda b: np.mean(np.var(b, axis=0) / np.mean(b, axis=0) ** 2)
        assert rel(single) == pytest.approx(1.0, rel=0.1)
        assert rel(combined) == pytest.approx(0.5, rel=0.1)

    def test_polarization_swap_keeps_energy(self):
        rng = np.random.default_rng(2)
        x, y = _noise(rng, 128), 3 * _noise(rng, 128)
        a = sp.accumulate(sp.block_psd(x, y, 128, 1e9))
        b = sp.accumulate(sp.block_psd(y, x, 128, 1e9))
        assert a[-1] == pytest.approx(b[-1], rel=1e-12)


class TestEwma:
    def _blocks(self, values):
        return [sp.SpectralBlock(np.asarray(v, dtype=float), 1.0, len(v)) for v in values]

    def test_first_block_initializes(self):
        st0 = sp.SpectralState(0.9)
        (b,) = self._blocks([[1.0, 2.0]])
        st1 = sp.ewma_update(st0, b)
        np.testing.assert_array_equal(st1.ewma_psd.bins, [1.0, 2.0])
        assert st1.blocks_seen == 1

    def test_zero_forgetting_tracks_latest(self):
        state = sp.SpectralState(0.0)
        for b in self._blocks([[1.0, 5.0], [2.0, 1.0], [7.0, 3.0]]):
            state = sp.ewma_update(state, b)
            np.testing.assert_array_equal(state.ewma_psd.bins, b.bins)

    def test_constant_input_is_fixed_point(self):
        state = sp.SpectralState(0.98)
        for b in self._blocks([[0.3, 1.7, 2.5]] * 50):
            state = sp.ewma_update(state, b)
        np.testing.assert_array_equal(state.ewma_psd.bins, [0.3, 1.7, 2.5])

    @settings(max_examples=30, deadline=None)
    @given(xi=st.floats(0.0, 0.99), vals=st.lists(st.floats(0, 1e3), min_size=1, max_size=40))
    def test_matches_weighted_mean(self, xi, vals):
        state = sp.SpectralState(xi)
        got = []
        for v in vals:
            state = sp.ewma_update(state, sp.SpectralBlock(np.array([v]), 1.0, 1))
            got.append(state.ewma_psd.bins[0])
        np.testing.assert_allclose(got, oracles.ewma_weighted_mean(vals, xi), rtol=1e-9, atol=1e-9)

    def test_gain_approaches_forgetting_complement(self):
        w = 0.0
        for _ in range(2000):
            g, w = sp.ewma_gain(0.98, w)
        assert g == pytest.approx(0.02, rel=1e-12)

    def test_steady_state_variance_reduction(self):
        rng = np.random.default_rng(4)
        xi, nbins = 0.98, 4096
        state = sp.SpectralState(xi)
        for _ in range(600):
            state = sp.ewma_update(state, sp.SpectralBlock(rng.exponential(1.0, nbins), 1.0, nbins))
        ratio = np.var(state.ewma_psd.bins) / 1.0
        assert ratio == pytest.approx(oracles.ewma_variance_factor(xi), rel=0.1)

    def test_grid_mismatch(self):
        state = sp.ewma_update(sp.SpectralState(0.5), sp.SpectralBlock(np.ones(4), 1.0, 4))
        with pytest.raises(InputError):
            sp.ewma_update(state, sp.SpectralBlock(np.ones(8), 1.0, 8))
        with pytest.raises(InputError):
            sp.ewma_update(state, sp.SpectralBlock(np.ones(4), 2.0, 4))

    @pytest.mark.parametrize("xi", [-0.1, 1.0])
    def test_bad_forgetting_factor(self, xi):
        with pytest.raises(ConfigurationError):
            sp.SpectralState(xi)


class TestDownsampleFactor:
    @pytest.mark.parametrize("args,want", [
        ((64e9, 4e9, 0.1, 5e9), 4),
        ((64e9, 32e9, 0.1, 10e9), 1),
        ((2e9, 1e9, 0.0, 0.0), 1),
        ((64e9, 1e9, 0.1, 5e9), 4),
        ((64e9, 1e9, 0.1, 0.0), 32),
    ])
    def test_examples(self, args, want):
        assert sp.downsample_factor(*args) == want

    def test_infeasible(self):
        with pytest.raises(ConfigurationError, match="cannot hold"):
            sp.downsample_factor(32e9, 32e9, 0.1, 1e9)

    @given(fs=st.floats(1e9, 1e11), rs_frac=st.floats(0.01, 0.5), a=st.floats(0, 1),
           df=st.floats(0, 2e10))
    def test_matches_reference(self, fs, rs_frac, a, df):
        rs = fs * rs_frac
        need = 2 * max(rs * (1 + a) / 2 + df, rs)
        if fs < need * (1 + 1e-9):
            return
        ratio = fs / need
        if abs(math.log2(ratio) - round(math.log2(ratio))) < 1e-9:
            return  # exact power-of-two boundary; covered by the examples
        assert sp.downsample_factor(fs, rs, a, df) == oracles.reference_downsample(fs, rs, a, df)


class TestTruncate:
    def _block(self, n=1024, fs=64e9):
        return sp.SpectralBlock(np.arange(n, dtype=float), fs / n, n)

    def test_identity(self):
        b = self._block()
        assert sp.truncate_spectrum(b, 1) is b

    def test_central_bins(self):
        b = self._block()
        t = sp.truncate_spectrum(b, 4)
        assert t.n_fft == 256 and t.df_hz == b.df_hz
        f = t.frequencies()
        assert f[0] == pytest.approx(-64e9 / 8) and f[-1] < 64e9 / 8
        np.testing.assert_array_equal(t.bins, np.arange(384, 640))

    def test_tone_survives(self):
        n, fs = 1024, 64e9
        f0 = 100 * fs / n
        x = np.exp(2j * np.pi * f0 * np.arange(n) / fs)
        full = sp.block_psd(x, x, n, fs)
        t = sp.truncate_spectrum(full, 4)
        k = int(np.argmax(t.bins))
        assert t.frequencies()[k] == pytest.approx(f0)
        assert t.bins[k] == full.bins[n // 2 + 100]

    @pytest.mark.parametrize("a,b", [(2, 2), (2, 4), (4, 8), (1, 16)])
    def test_composition(self, a, b):
        blk = self._block()
        np.testing.assert_array_equal(
            sp.truncate_spectrum(sp.truncate_spectrum(blk, a), b).bins,
            sp.truncate_spectrum(blk, a * b).bins,
        )

    @pytest.mark.parametrize("n_down", [3, 2048])
    def test_bad_factor(self, n_down):
        with pytest.raises(ConfigurationError):
            sp.truncate_spectrum(self._block(), n_down)


class TestAccumulate:
    def test_flat_ramp(self):
        b = sp.SpectralBlock(np.full(64, 2.5), 0.5, 64)
        np.testing.assert_allclose(sp.accumulate(b), 2.5 * 0.5 / 64 * np.arange(1, 65), rtol=1e-14)

    def test_single_bin_step(self):
        bins = np.zeros(32)
        bins[10] = 4.0
        c = sp.accumulate(sp.SpectralBlock(bins, 1.0, 32))
        np.testing.assert_array_equal(c[:10], 0.0)
        np.testing.assert_allclose(c[10:], 4.0 / 32)

    def test_final_value_is_parseval(self):
        rng = np.random.default_rng(7)
        x, y = _noise(rng, 512), _noise(rng, 512)
        fs = 16e9
        c = sp.accumulate(sp.block_psd(x, y, 512, fs))
        power = np.sum(np.abs(x) ** 2 + np.abs(y) ** 2)  # time-domain energy
        assert c[-1] == pytest.approx(power * fs / 512, rel=1e-10)

    def test_negative_bins(self):
        with pytest.raises(InputError):
            sp.accumulate(sp.SpectralBlock(np.array([1.0, -1.0]), 1.0, 2))

    @given(hnp.arrays(float, st.integers(1, 200), elements=st.floats(0, 1e6)))
    def test_nondecreasing(self, bins):
        c = sp.accumulate(sp.SpectralBlock(bins, 1.0, bins.shape[0]))
        assert np.all(np.diff(c) >= 0)


class TestTrimAndNormalize:
    def test_no_trim_endpoints(self):
        m = 256
        c = sp.trim_and_normalize(np.cumsum(np.ones(m)), 1e6, 0.0)
        assert c.x[0] == pytest.approx(-0.5 + 0.5 / m)
        assert c.x[-1] == pytest.approx(0.5 - 0.5 / m)
        assert c.y.min() == 0.0 and c.y.max() == 1.0
        assert c.hz_per_unit == m * 1e6

    @pytest.mark.parametrize("frac,m,k", [(0.02, 256, 6), (0.02, 100, 2), (0.1, 64, 7), (0.0, 64, 0)])
    def test_trim_count(self, frac, m, k):
        c = sp.trim_and_normalize(np.arange(1, m + 1, dtype=float), 1.0, frac)
        assert c.x.shape == (m - 2 * k,)
        x_full = (np.arange(m) - m / 2 + 0.5) / m
        np.testing.assert_allclose(c.x, x_full[k : m - k])

    def test_to_hz(self):
        c = sp.trim_and_normalize(np.arange(1, 65, dtype=float), 2e6, 0.0)
        assert c.to_hz(0.25) == pytest.approx(0.25 * 64 * 2e6)

    def test_too_short(self):
        with pytest.raises(InputError):
            sp.trim_and_normalize(np.arange(10.0), 1.0, 0.2)

    def test_flat(self):
        with pytest.raises(InputError):
            sp.trim_and_normalize(np.zeros(64), 1.0, 0.02)

    @pytest.mark.parametrize("frac", [-0.01, 0.25])
    def test_bad_fraction(self, frac):
        with pytest.raises(ConfigurationError):
            sp.trim_and_normalize(np.arange(64.0), 1.0, frac)

    @given(hnp.arrays(float, st.integers(16, 300), elements=st.floats(0, 1e3)),
           st.floats(0, 0.2))
    def test_property_monotone_unit_range(self, bins, frac):
        cum = np.cumsum(bins)
        k = math.ceil(round(frac * cum.shape[0], 9))
        if cum.shape[0] - 2 * k < 8 or not np.ptp(cum[k : cum.shape[0] - k]) > 0:
            return
        c = sp.trim_and_normalize(cum, 1.0, frac)
        assert np.all(np.diff(c.x) > 0)
        assert np.all(np.diff(c.y) >= -1e-15)
        assert c.y.max() == 1.0 and c.y.min() == 0.0
        assert np.all((c.x > -0.5) & (c.x < 0.5))


def test_iter_blocks_drops_partial():
    sig = DualPolSignal(np.arange(10), np.arange(10), 1.0)
    blocks = list(sp.iter_blocks(sig, 4))
    assert len(blocks) == 2
    np.testing.assert_array_equal(blocks[1][0], [4, 5, 6, 7])
