"""CIP construction, feature extraction, and profile distance."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from angiosim.cip import Cip, align_time_zero, cip_l2, compute_cip, extract_features
from angiosim.errors import ConfigError
from angiosim.render import AngiogramFrame


def frame_with_dark_pixels(k: int, t: float, shape=(32, 32)) -> AngiogramFrame:
    img = np.full(shape, 255, dtype=np.uint8)
    img.flat[:k] = 0
    return AngiogramFrame(image=img, timestamp=t)


def trapezoid_cip(dt: float = 0.01) -> Cip:
    """Ramp 0->1 over 1 s, plateau 1 s, fall to 0 over 2 s."""
    t = np.arange(0.0, 4.0 + dt / 2, dt)
    v = np.where(t <= 1.0, t, np.where(t <= 2.0, 1.0, np.maximum(1.0 - (t - 2.0) / 2.0, 0.0)))
    return Cip(times=t, values=v)


class TestComputeCip:
    def test_counts_normalized_by_sequence_max(self):
        frames = [frame_with_dark_pixels(k, 0.1 * i) for i, k in enumerate((0, 50, 100, 100, 20))]
        cip = compute_cip(frames, I_thr=250)
        np.testing.assert_allclose(cip.values, [0.0, 0.5, 1.0, 1.0, 0.2])
        assert not cip.all_zero

    def test_all_zero_counts_flagged_not_normalized(self):
        frames = [frame_with_dark_pixels(0, 0.1 * i) for i in range(4)]
        cip = compute_cip(frames, I_thr=250)
        assert cip.all_zero
        assert np.all(cip.values == 0.0)

    def test_saturated_sequence_is_constant_one(self):
        frames = [frame_with_dark_pixels(1024, 0.1 * i) for i in range(3)]
        cip = compute_cip(frames, I_thr=250)
        np.testing.assert_allclose(cip.values, 1.0)

    def test_requires_two_frames(self):
        with pytest.raises(ConfigError, match="2 frames"):
            compute_cip([frame_with_dark_pixels(5, 0.0)], I_thr=250)

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(deadline=None, max_examples=25)
    def test_values_always_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        frames = [
            AngiogramFrame(
                image=rng.integers(0, 256, size=(8, 8), dtype=np.uint8), timestamp=float(i)
            )
            for i in range(5)
        ]
        cip = compute_cip(frames, I_thr=250)
        assert cip.values.min() >= 0.0 and cip.values.max() <= 1.0


class TestCipValidation:
    def test_times_must_increase(self):
        with pytest.raises(ConfigError, match="increasing"):
            Cip(times=np.array([0.0, 0.0, 1.0]), values=np.array([0.0, 1.0, 0.0]))

    def test_normalized_peak_required(self):
        with pytest.raises(ConfigError, match="attain 1"):
            Cip(times=np.array([0.0, 1.0]), values=np.array([0.0, 0.5]))

    def test_negative_values_rejected(self):
        with pytest.raises(ConfigError, match="non-negative"):
            Cip(times=np.array([0.0, 1.0]), values=np.array([-0.1, 1.0]))

    def test_all_zero_flag_consistency(self):
        with pytest.raises(ConfigError, match="all_zero"):
            Cip(times=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]), all_zero=True)


class TestSmoothed:
    def test_spike_averaged_and_renormalized(self):
        cip = Cip(times=np.arange(5.0), values=np.array([0.0, 0.0, 1.0, 0.0, 0.0]))
        out = cip.smoothed(3)
        # Valid 3-point windows all average to 1/3, renormalized to 1.
        np.testing.assert_allclose(out.times, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(out.values, 1.0, rtol=1e-12)
        assert out.values.max() == 1.0

    def test_period_matched_ripple_flattens(self):
        v = np.tile([1.0, 0.8, 0.9], 4)
        cip = Cip(times=np.arange(v.size, dtype=float), values=v)
        out = cip.smoothed(3)
        np.testing.assert_allclose(out.values, 1.0, rtol=1e-12)

    def test_clean_trapezoid_features_preserved(self):
        # Centered averaging is exact on linear segments, so the level
        # crossings and fitted slopes only move near the corners.
        raw = extract_features(trapezoid_cip())
        smoothed = extract_features(trapezoid_cip().smoothed(3))
        assert smoothed.rising_slope == pytest.approx(raw.rising_slope, rel=1e-9)
        assert smoothed.falling_slope == pytest.approx(raw.falling_slope, rel=1e-9)
        assert smoothed.plateau_duration == pytest.approx(raw.plateau_duration, rel=1e-6)
        assert smoothed.auc == pytest.approx(raw.auc, rel=1e-3)

    def test_width_one_and_all_zero_are_identity(self):
        cip = trapezoid_cip()
        assert cip.smoothed(1) is cip
        zero = Cip(times=np.array([0.0, 1.0, 2.0]), values=np.zeros(3), all_zero=True)
        assert zero.smoothed(3) is zero

    @pytest.mark.parametrize("width", [0, -3, 2, 4])
    def test_even_or_nonpositive_width_rejected(self, width):
        with pytest.raises(ConfigError, match="odd"):
            trapezoid_cip().smoothed(width)

    def test_profile_shorter_than_window_rejected(self):
        cip = Cip(times=np.array([0.0, 1.0]), values=np.array([0.0, 1.0]))
        with pytest.raises(ConfigError, match="smooth"):
            cip.smoothed(3)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=5, max_size=40),
    )
    @settings(max_examples=60, deadline=None)
    def test_monotone_profiles_stay_monotone(self, raw):
        v = np.maximum.accumulate(np.asarray(raw))
        if v.max() == 0.0:
            v[-1] = 1.0
        v /= v.max()
        cip = Cip(times=np.arange(v.size, dtype=float), values=v)
        out = cip.smoothed(3)
        assert np.all(np.diff(out.values) >= -1e-12)


class TestExtractFeatures:
    def test_trapezoid_closed_form(self):
        feats = extract_features(trapezoid_cip())
        assert feats.rising_slope == pytest.approx(1.0, rel=1e-9)
        assert feats.falling_slope == pytest.approx(-0.5, rel=1e-9)
        # Time above 0.9: rising crosses at t=0.9, falling at t=2.2.
        assert feats.plateau_duration == pytest.approx(1.3, rel=1e-9)
        # Trapezoidal area: 0.5 + 1.0 + 1.0.
        assert feats.auc == pytest.approx(2.5, rel=1e-9)

    def test_coarse_sampling_interpolates_crossings(self):
        feats = extract_features(trapezoid_cip(dt=0.1))
        assert feats.plateau_duration == pytest.approx(1.3, rel=1e-9)
        assert feats.rising_slope == pytest.approx(1.0, rel=1e-9)

    def test_all_zero_profile_reports_absent(self):
        cip = Cip(times=np.array([0.0, 1.0, 2.0]), values=np.zeros(3), all_zero=True)
        assert extract_features(cip) is None

    def test_auc_ratio_fixture_format(self):
        base = extract_features(trapezoid_cip())
        stretched = trapezoid_cip()
        wider = Cip(times=stretched.times * 1.14571, values=stretched.values)
        assert extract_features(wider).auc / base.auc == pytest.approx(1.14571, rel=1e-9)

    def test_feature_sign_conventions(self):
        feats = extract_features(trapezoid_cip())
        assert feats.rising_slope >= 0.0
        assert feats.falling_slope <= 0.0
        assert feats.auc >= 0.0
        d = feats.to_dict()
        assert set(d) == {
            "rising_slope_per_s",
            "falling_slope_per_s",
            "plateau_duration_s",
            "auc_s",
        }


class TestCipL2:
    def test_identical_profiles_give_zero(self):
        a, b = trapezoid_cip(), trapezoid_cip()
        assert cip_l2(a, b) == 0.0

    def test_unit_offset_gives_one(self):
        t = np.arange(0.0, 1.0, 0.1)
        a = Cip(times=t, values=np.ones_like(t))
        b = Cip(times=t, values=np.zeros_like(t), all_zero=True)
        assert cip_l2(a, b) == pytest.approx(1.0)

    def test_squared_value_is_mean_squared_error(self):
        rng = np.random.default_rng(11)
        t = np.linspace(0.0, 5.0, 60)
        va = rng.uniform(0.0, 1.0, t.size)
        va[7] = 1.0
        vb = rng.uniform(0.0, 1.0, t.size)
        vb[3] = 1.0
        a, b = Cip(times=t, values=va), Cip(times=t, values=vb)
        mse = float(np.mean((va - vb) ** 2))
        assert cip_l2(a, b) ** 2 == pytest.approx(mse, rel=1e-12)
        # The published-error convention: MSE 0.0155 corresponds to ~0.1245.
        assert math.sqrt(0.0155) == pytest.approx(0.1245, abs=5e-4)

    def test_restricted_to_overlapping_range(self):
        ta = np.arange(0.0, 4.0 + 1e-9, 0.01)
        tb = np.arange(2.0, 8.0, 0.1)
        a = trapezoid_cip()
        vb = np.interp(tb, a.times, a.values)
        vb[0] = 1.0  # keep b normalized despite the clipped tail
        b = Cip(times=tb, values=vb)
        # On the overlap [2, 4] a interpolates exactly onto b's samples
        # except the one we forced to 1.
        sel = tb <= 4.0
        expected = np.sqrt(np.mean((np.interp(tb[sel], ta, a.values) - vb[sel]) ** 2))
        assert cip_l2(a, b) == pytest.approx(float(expected), rel=1e-12)

    def test_disjoint_ranges_error(self):
        t = np.arange(0.0, 1.0, 0.1)
        a = Cip(times=t, values=np.where(t == 0.5, 1.0, 0.0))
        b = Cip(times=t + 10.0, values=np.where(t == 0.5, 1.0, 0.0))
        with pytest.raises(ConfigError, match="overlap"):
            cip_l2(a, b)


class TestAlignment:
    def test_clinical_zero_at_first_sample_above_five_percent(self):
        t = np.array([3.0, 3.5, 4.0, 4.5, 5.0])
        v = np.array([0.0, 0.04, 0.5, 1.0, 0.3])
        shifted = align_time_zero(Cip(times=t, values=v))
        assert shifted.times[2] == 0.0
        np.testing.assert_allclose(shifted.values, v)

    def test_all_zero_unchanged(self):
        cip = Cip(times=np.array([1.0, 2.0]), values=np.zeros(2), all_zero=True)
        assert align_time_zero(cip) is cip
