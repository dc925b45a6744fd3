import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phonation import dsp
from phonation.dsp import (FeatureKind, MelConfig, MfccConfig, StftConfig,
                           dct_matrix, delta_regression, mel_feature, mel_filterbank,
                           mfcc_feature, spectrogram_feature, stft_log_magnitude,
                           stft_magnitude)

import oracles
from helpers import make_clip, sine

CFG = StftConfig()


class TestStft:
    def test_513_bins(self):
        m = stft_log_magnitude(make_clip(sine(500, 0.2, 16000)), CFG)
        assert m.shape[1] == 513

    def test_frame_count_formula(self):
        for n in (400, 401, 479, 480, 4000, 4001):
            m = stft_log_magnitude(make_clip(np.random.default_rng(n).normal(size=n)), CFG)
            assert len(m) == (n - 400) // 80 + 1

    @given(st.integers(min_value=400, max_value=6000))
    @settings(max_examples=40, deadline=None)
    def test_frame_count_property(self, n):
        assert dsp.frame_count(n, CFG) == (n - 400) // 80 + 1

    def test_silent_clip_hits_floor(self):
        m = stft_log_magnitude(make_clip(np.zeros(800)), CFG)
        assert np.all(m == np.log10(1e-10))
        assert np.all(m == -10.0)

    def test_1khz_sine_peak_bin(self):
        # bin spacing 16000/1024 Hz puts a 1 kHz tone at bin 64
        m = stft_log_magnitude(make_clip(sine(1000, 1.0, 16000)), CFG)
        assert round(1000 / (16000 / 1024)) == 64
        assert np.all(np.argmax(m, axis=1) == 64)

    def test_too_short_clip(self):
        with pytest.raises(ValueError, match="too short"):
            stft_log_magnitude(make_clip(np.ones(399)), CFG)

    def test_matches_naive_dft_oracle(self):
        x = sine(1234.5, 0.15, 16000)
        ours = stft_log_magnitude(make_clip(x), CFG)
        ref = np.log10(np.maximum(oracles.oracle_magnitudes(x), 1e-10))
        np.testing.assert_allclose(ours, ref, atol=1e-6)

    def test_parseval_per_frame(self):
        # one-sided spectrum without doubling: reconstruct the two-sided sum
        rng = np.random.default_rng(3)
        x = rng.normal(size=1200)
        frames = dsp.frame_signal(x, CFG)
        mags = stft_magnitude(make_clip(x), CFG)
        for frame, row in zip(frames, mags):
            power = row**2
            two_sided = power[0] + 2 * power[1:-1].sum() + power[-1]
            energy = np.sum(frame**2)
            assert abs(two_sided / CFG.fft_size - energy) / energy < 1e-6

    def test_scaling_shifts_log_spectrum(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=2000)
        c = 3.7
        base = stft_log_magnitude(make_clip(x), CFG)
        scaled = stft_log_magnitude(make_clip(c * x), CFG)
        assert np.min(base) > -9  # everything above the floor
        np.testing.assert_allclose(scaled - base, np.log10(c), atol=1e-12)

    def test_deterministic(self):
        x = sine(777, 0.3, 16000)
        a = stft_log_magnitude(make_clip(x), CFG)
        b = stft_log_magnitude(make_clip(x.copy()), CFG)
        assert np.array_equal(a, b)


class TestSpectrogramFeature:
    def test_single_frame_equals_its_spectrum(self):
        x = sine(600, 0.025, 16000)
        assert len(x) == 400
        fv = spectrogram_feature(make_clip(x), CFG)
        np.testing.assert_array_equal(fv.values, stft_log_magnitude(make_clip(x), CFG)[0])

    def test_two_identical_halves(self):
        # 200 Hz at 16 kHz has an 80-sample period, exactly one hop
        half = sine(200, 0.25, 16000)
        whole = np.concatenate([half, half])
        a = spectrogram_feature(make_clip(half), CFG).values
        b = spectrogram_feature(make_clip(whole), CFG).values
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_matches_bruteforce_mean(self):
        x = sine(1500, 0.2, 16000)
        fv = spectrogram_feature(make_clip(x), CFG)
        np.testing.assert_allclose(fv.values, oracles.oracle_spectrogram_feature(x), atol=1e-6)
        assert fv.dim == 513
        assert fv.kind is FeatureKind.SPECTROGRAM

    def test_scaling_shifts_feature(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=3000)
        a = spectrogram_feature(make_clip(x), CFG).values
        b = spectrogram_feature(make_clip(2.0 * x), CFG).values
        np.testing.assert_allclose(b - a, np.log10(2.0), atol=1e-12)


class TestMelFilterbank:
    FB = mel_filterbank(MelConfig(), 16000, 1024)

    def test_shape_and_nonneg(self):
        assert self.FB.shape == (80, 513)
        assert np.all(self.FB >= 0)

    def test_each_filter_peaks_at_one_and_unimodal(self):
        for row in self.FB:
            assert row.max() == 1.0
            support = np.flatnonzero(row > 0)
            peak = np.argmax(row)
            rising = row[support[0]: peak + 1]
            falling = row[peak: support[-1] + 1]
            assert np.all(np.diff(rising) > 0)
            assert np.all(np.diff(falling) < 0)

    def test_support_between_neighbor_centers(self):
        centers = np.array([np.argmax(row) for row in self.FB])
        assert np.all(np.diff(centers) > 0)  # strictly increasing in Hz
        for m in range(1, 79):
            support = np.flatnonzero(self.FB[m] > 0)
            assert support[0] > centers[m - 1] - 1
            assert support[-1] < centers[m + 1] + 1

    def test_matches_loop_constructed_triangles(self):
        ref = oracles.oracle_mel_filterbank(80, 0.0, 8000.0, 16000, 1024)
        np.testing.assert_allclose(self.FB, ref, atol=1e-12)

    def test_all_ones_spectrum_gives_coefficient_sums(self):
        ones = np.ones(513)
        out = self.FB @ ones
        expected = np.array([row.sum() for row in oracles.oracle_mel_filterbank(80, 0.0, 8000.0, 16000, 1024)])
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_fmax_above_nyquist_rejected(self):
        with pytest.raises(ValueError, match="Nyquist"):
            mel_filterbank(MelConfig(fmax=9000), 16000, 1024)


class TestMelFeature:
    def test_dim_80(self):
        fv = mel_feature(make_clip(sine(440, 0.2, 16000)))
        assert fv.dim == 80
        assert fv.kind is FeatureKind.MEL

    def test_silent_clip_constant_floor(self):
        fv = mel_feature(make_clip(np.zeros(900)))
        np.testing.assert_array_equal(fv.values, np.full(80, np.log10(1e-10)))

    def test_matches_oracle(self):
        x = sine(850, 0.15, 16000) + 0.2 * sine(2500, 0.15, 16000)
        fv = mel_feature(make_clip(x))
        np.testing.assert_allclose(fv.values, oracles.oracle_mel_feature(x), atol=1e-6)


class TestDct:
    def test_orthonormal_80(self):
        M = dct_matrix(80)
        np.testing.assert_allclose(M @ M.T, np.eye(80), atol=1e-9)

    def test_matches_explicit_sums(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=80)
        ours = dct_matrix(80)[:13] @ x
        np.testing.assert_allclose(ours, oracles.oracle_dct2_ortho(x, 13), atol=1e-9)


class TestDeltas:
    def test_constant_frames_give_zero(self):
        c = np.tile(np.arange(13.0), (9, 1))
        d = delta_regression(c, 2)
        assert np.all(d == 0.0)

    def test_random_five_frames_match_oracle(self):
        rng = np.random.default_rng(8)
        c = rng.normal(size=(5, 13))
        np.testing.assert_allclose(delta_regression(c, 2), oracles.oracle_deltas(c, 2), atol=1e-9)

    def test_linear_ramp_interior_slope(self):
        c = np.arange(10.0)[:, None] * np.ones((1, 3))
        d = delta_regression(c, 2)
        np.testing.assert_allclose(d[2:-2], 1.0)


class TestMfccFeature:
    def test_dim_39(self):
        fv = mfcc_feature(make_clip(sine(440, 0.2, 16000)))
        assert fv.dim == 39
        assert fv.kind is FeatureKind.MFCC

    def test_matches_oracle(self):
        x = sine(330, 0.12, 16000) + 0.1 * sine(4200.3, 0.12, 16000)
        fv = mfcc_feature(make_clip(x))
        np.testing.assert_allclose(fv.values, oracles.oracle_mfcc_feature(x), atol=1e-6)

    def test_too_few_frames_for_deltas(self):
        x = sine(440, 0.04, 16000)  # 640 samples -> 4 frames < 5 needed
        with pytest.raises(ValueError, match="too few frames"):
            mfcc_feature(make_clip(x))

    def test_delta_blocks_zero_for_stationary_cepstra(self):
        # bit-exact hop-periodic signal: every analysis frame is identical,
        # so the delta and delta-delta blocks are exactly zero
        block = np.random.default_rng(4).normal(size=80)
        x = np.tile(block, 60)
        frames = dsp.mfcc_frames(make_clip(x))
        assert np.all(frames[:, 13:] == 0.0)


def test_feature_vector_rejects_non_finite():
    with pytest.raises(ValueError, match="finite"):
        dsp.FeatureVector(FeatureKind.MEL, np.array([1.0, np.nan]))


def test_baseline_dims_constant():
    assert dsp.BASELINE_DIMS[FeatureKind.SPECTROGRAM] == 513
    assert dsp.BASELINE_DIMS[FeatureKind.MEL] == 80
    assert dsp.BASELINE_DIMS[FeatureKind.MFCC] == 39
