from __future__ import annotations

import numpy as np
import pytest

from rfscene.augment import (
    Agc,
    AddSlope,
    AmplitudeReversal,
    ChannelSwap,
    Clip,
    CutMix,
    CutOut,
    GainDrift,
    IQ_AUG_VARIANTS,
    LoDrift,
    MixUp,
    MosaicCrop,
    MosaicDownsample,
    PatchShuffle,
    Quantize,
    SpecDropSamples,
    SpecPatchShuffle,
    SpecRandomResizeCrop,
    SpecResize,
    SpecTranslation,
    TimeReversal,
    TimeVaryingNoise,
    apply_iq_augmentation,
    apply_spec_augmentation,
    bounded_random_walk,
    mix_augmentation,
)
from rfscene.dsp import ParameterError, spectrogram, tone
from rfscene.modem import ModFamily
from rfscene.scenes import SignalAnnotation, WidebandExample

RNG = np.random.default_rng


def example_with(anns, n=8192, seed=0):
    rng = np.random.default_rng(seed)
    iq = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    return WidebandExample(iq, anns, {"noise_psd": 1.0})


def box(t, d, f=0.1, b=0.05, cls=4):
    return SignalAnnotation(cls, ModFamily.PSK, t, d, f, b, 20.0)


class TestTimeReversal:
    def test_samples_and_boxes(self):
        x = example_with([box(0.2, 0.1)], n=16)
        x.iq = np.arange(16, dtype=complex)
        y = apply_iq_augmentation(x, TimeReversal(), RNG(0))
        assert np.array_equal(y.iq, x.iq[::-1])
        assert y.annotations[0].t_start == pytest.approx(0.7)
        assert y.annotations[0].duration == pytest.approx(0.1)
        assert y.annotations[0].f_center == -0.1

    def test_undo_flag_keeps_frequency(self):
        x = example_with([box(0.2, 0.1)])
        y = apply_iq_augmentation(x, TimeReversal(undo_spectral_inversion=True), RNG(0))
        assert y.annotations[0].f_center == 0.1
        assert np.array_equal(y.iq, np.conj(x.iq[::-1]))

    @pytest.mark.parametrize("variant", [
        TimeReversal(), TimeReversal(undo_spectral_inversion=True),
        ChannelSwap(), AmplitudeReversal(),
    ])
    def test_involutions_bit_exact(self, variant):
        x = example_with([box(0.2, 0.3)])
        y = apply_iq_augmentation(apply_iq_augmentation(x, variant, RNG(1)), variant, RNG(1))
        assert np.array_equal(y.iq, x.iq)
        assert y.annotations == x.annotations


class TestSimpleVariants:
    def test_channel_swap(self):
        x = example_with([], n=2)
        x.iq = np.array([1 + 2j, -3 + 0.5j])
        y = apply_iq_augmentation(x, ChannelSwap(), RNG(0))
        assert np.array_equal(y.iq, np.array([2 + 1j, 0.5 - 3j]))

    def test_quantize_level_count(self):
        x = example_with([], n=4096)
        for rounding in ("floor", "middle", "ceiling"):
            y = apply_iq_augmentation(x, Quantize(levels=8, rounding=rounding), RNG(0))
            assert len(np.unique(y.iq.real)) <= 8
            assert len(np.unique(y.iq.imag)) <= 8

    def test_clip_bounds(self):
        x = example_with([], n=4096)
        y = apply_iq_augmentation(x, Clip(fraction=0.8), RNG(0))
        assert y.iq.real.max() <= 0.8 * x.iq.real.max() + 1e-12
        assert y.iq.real.min() >= 0.8 * x.iq.real.min() - 1e-12
        assert y.iq.imag.max() <= 0.8 * x.iq.imag.max() + 1e-12

    def test_add_slope(self):
        x = example_with([], n=4)
        x.iq = np.array([1.0, 2.0, 4.0, 7.0], dtype=complex)
        y = apply_iq_augmentation(x, AddSlope(), RNG(0))
        assert np.allclose(y.iq, [1.0, 3.0, 6.0, 10.0])

    def test_patch_shuffle_preserves_multiset(self):
        x = example_with([], n=1024)
        y = apply_iq_augmentation(x, PatchShuffle(patch_size=16, shuffle_ratio=1.0), RNG(2))
        assert not np.array_equal(y.iq, x.iq)
        assert np.allclose(np.sort(y.iq.view(float)), np.sort(x.iq.view(float)))

    def test_time_varying_noise_adds_power(self):
        x = example_with([], n=16384)
        y = apply_iq_augmentation(x, TimeVaryingNoise(-3.0, 3.0, 2), RNG(3))
        assert np.mean(np.abs(y.iq) ** 2) > np.mean(np.abs(x.iq) ** 2)

    def test_unknown_variant(self):
        with pytest.raises(ParameterError):
            apply_iq_augmentation(example_with([]), object(), RNG(0))


class TestCutOut:
    def test_split_bisected_annotation(self):
        x = example_with([box(0.3, 0.4)])
        y = apply_iq_augmentation(x, CutOut(duration=0.1, fill="zeros", start=0.4), RNG(0))
        spans = sorted((a.t_start, round(a.duration, 9)) for a in y.annotations)
        assert spans == [(0.3, 0.1), (0.5, 0.2)]

    def test_fully_covered_deleted(self):
        x = example_with([box(0.42, 0.05)])
        y = apply_iq_augmentation(x, CutOut(duration=0.2, fill="zeros", start=0.4), RNG(0))
        assert y.annotations == []

    def test_zero_fill_region(self):
        x = example_with([], n=1000)
        y = apply_iq_augmentation(x, CutOut(duration=0.1, fill="zeros", start=0.4), RNG(0))
        assert not y.iq[400:500].any()
        assert np.array_equal(y.iq[:400], x.iq[:400])

    @pytest.mark.parametrize("fill,scale", [("low_noise", 0.1), ("avg_noise", 1.0), ("high_noise", 10.0)])
    def test_noise_fill_levels(self, fill, scale):
        x = example_with([], n=65_536)
        y = apply_iq_augmentation(x, CutOut(duration=0.5, fill=fill, start=0.25), RNG(4))
        region = y.iq[16_384 : 16_384 + 32_768]
        assert np.mean(np.abs(region) ** 2) == pytest.approx(scale, rel=0.1)


class TestWalkVariants:
    def test_bounded_walk_resets(self):
        rng = RNG(5)
        walk = bounded_random_walk(rng.normal(0, 0.05, size=20_000), 0.3)
        assert np.max(np.abs(walk)) <= 0.3
        resets = np.flatnonzero(walk == 0.0)
        assert resets.size >= 1

    def test_lo_drift_envelope(self):
        x = example_with([], n=8192)
        y = apply_iq_augmentation(x, LoDrift(drift_rate=1e-4, max_drift=0.01), RNG(6))
        assert np.allclose(np.abs(y.iq), np.abs(x.iq))

    def test_gain_drift_bounded(self):
        x = example_with([], n=8192)
        y = apply_iq_augmentation(x, GainDrift(drift_rate_db=0.01, max_drift_db=1.0), RNG(7))
        ratio_db = 20 * np.log10(np.abs(y.iq) / np.abs(x.iq))
        assert np.max(np.abs(ratio_db)) <= 1.0 + 1e-9


class TestAgc:
    def test_disabled_adaptation_is_constant_gain(self):
        x = example_with([], n=2048)
        p = Agc(initial_gain_db=6.0, alpha_smooth=0.0, alpha_track=0.0,
                alpha_overflow=0.0, alpha_acquire=0.0)
        y = apply_iq_augmentation(x, p, RNG(8))
        assert np.allclose(y.iq, x.iq * 10 ** (6.0 / 20.0))

    def test_drives_level_toward_reference(self):
        rng = RNG(9)
        x = example_with([], n=4096)
        x.iq = 0.01 * x.iq  # -40 dB input
        p = Agc(ref_level_db=0.0, alpha_smooth=0.2, alpha_track=0.05,
                alpha_acquire=0.2, low_level_db=-80.0)
        y = apply_iq_augmentation(x, p, rng)
        tail = 20 * np.log10(np.abs(y.iq[-500:]) + 1e-30)
        assert abs(np.median(tail)) < 3.0


class TestMix:
    def test_mixup_zero_weight_identity(self):
        x = example_with([box(0.1, 0.2)])
        y = example_with([box(0.6, 0.2, f=-0.2)], seed=1)
        z = mix_augmentation(x, y, MixUp(weight=0.0), RNG(10))
        assert np.array_equal(z.iq, x.iq)
        assert z.annotations == x.annotations

    def test_mixup_union(self):
        x = example_with([box(0.1, 0.2)])
        y = example_with([box(0.6, 0.2, f=-0.2)], seed=1)
        z = mix_augmentation(x, y, MixUp(weight=0.5), RNG(10))
        assert len(z.annotations) == 2
        assert np.allclose(z.iq, x.iq + 0.5 * y.iq)

    def test_cutmix_full_region_is_secondary(self):
        x = example_with([box(0.1, 0.2)])
        y = example_with([box(0.6, 0.2, f=-0.2)], seed=1)
        z = mix_augmentation(x, y, CutMix(0.0, 1.0), RNG(10))
        assert np.array_equal(z.iq, y.iq)
        assert z.annotations == y.annotations

    def test_cutmix_splits_straddlers(self):
        x = example_with([box(0.0, 1.0)])
        y = example_with([box(0.3, 0.6, f=-0.2)], seed=1)
        z = mix_augmentation(x, y, CutMix(0.25, 0.75), RNG(10))
        spans = sorted((round(a.t_start, 6), round(a.t_stop, 6), a.f_center) for a in z.annotations)
        assert spans == [(0.0, 0.25, 0.1), (0.3, 0.75, -0.2), (0.75, 1.0, 0.1)]
        assert np.array_equal(z.iq[2048:6144], y.iq[2048:6144])

    def test_length_mismatch(self):
        with pytest.raises(ParameterError):
            mix_augmentation(example_with([], n=512), example_with([], n=1024), MixUp(0.5), RNG(0))


def make_spec(n=262_144, freq=0.1, seed=0):
    rng = np.random.default_rng(seed)
    iq = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    iq = iq + tone(n, freq, amplitude=3.0)
    ann = SignalAnnotation(4, ModFamily.PSK, 0.0, 1.0, freq, 0.02, 20.0)
    return spectrogram(iq), [ann], iq


class TestSpecAugs:
    def test_translation_identity(self):
        s, anns, _ = make_spec(n=16 * 512)
        out, boxes = apply_spec_augmentation(s, anns, SpecTranslation(0, 0), RNG(0))
        assert np.array_equal(out, s)
        assert boxes == anns

    def test_translation_moves_boxes_and_pixels(self):
        s, anns, _ = make_spec(n=16 * 512)
        out, boxes = apply_spec_augmentation(s, anns, SpecTranslation(4, 32), RNG(0))
        assert boxes[0].t_start == pytest.approx(anns[0].t_start + 4 / 16)
        assert boxes[0].f_center == pytest.approx(anns[0].f_center + 32 / 512, abs=1e-9)
        assert np.array_equal(out[32:, 4:], s[:-32, :-4])

    def test_resize_pads_with_noise(self):
        s, anns, _ = make_spec(n=16 * 512)
        out, boxes = apply_spec_augmentation(s, anns, SpecResize(512, 32), RNG(1))
        assert out.shape == (512, 32)
        assert np.array_equal(out[:, :16], s)
        pad_power = np.mean(np.abs(out[:, 16:]) ** 2)
        assert pad_power == pytest.approx(np.median(np.abs(s) ** 2), rel=0.25)
        assert boxes[0].duration == pytest.approx(0.5)

    def test_drop_and_shuffle_leave_boxes(self):
        s, anns, _ = make_spec(n=16 * 512)
        for variant in (SpecDropSamples(rate=0.02, size=8, fill="zero"),
                        SpecPatchShuffle(patch_size=8, shuffle_ratio=0.5)):
            out, boxes = apply_spec_augmentation(s, anns, variant, RNG(2))
            assert out.shape == s.shape
            assert boxes == anns

    def test_random_resize_crop_shapes(self):
        s, anns, iq = make_spec(n=262_144)
        for seed in range(3):
            out, boxes = apply_spec_augmentation(
                s, anns, SpecRandomResizeCrop(), RNG(seed), iq=iq)
            assert out.shape == (512, 512)
            for b in boxes:
                b.validate()

    def test_random_resize_crop_needs_iq(self):
        s, anns, _ = make_spec(n=16 * 512)
        with pytest.raises(ParameterError):
            apply_spec_augmentation(s, anns, SpecRandomResizeCrop(), RNG(0))

    def test_mosaic_crop_quadrant_zero(self):
        panes = [make_spec(n=16 * 512, freq=f, seed=i) for i, f in enumerate((0.1, -0.2, 0.3, -0.1))]
        s, anns, _ = panes[0]
        extras = [(p[0], p[1]) for p in panes[1:]]
        out, boxes = apply_spec_augmentation(
            s, anns, MosaicCrop(origin=(0, 0)), RNG(3), extras=tuple(extras))
        assert np.array_equal(out, s)
        assert len(boxes) == 1
        assert boxes[0].f_center == pytest.approx(anns[0].f_center, abs=1e-9)

    def test_mosaic_downsample_keeps_all_boxes(self):
        panes = [make_spec(n=16 * 512, freq=f, seed=i) for i, f in enumerate((0.1, -0.2, 0.3, -0.1))]
        s, anns, _ = panes[0]
        extras = [(p[0], p[1]) for p in panes[1:]]
        out, boxes = apply_spec_augmentation(
            s, anns, MosaicDownsample(), RNG(4), extras=tuple(extras))
        assert out.shape == s.shape
        assert len(boxes) == 4
        assert boxes[0].bandwidth == pytest.approx(anns[0].bandwidth / 2)
        assert boxes[0].duration == pytest.approx(anns[0].duration / 2)

    def test_mosaic_extras_count_enforced(self):
        s, anns, _ = make_spec(n=16 * 512)
        with pytest.raises(ParameterError):
            apply_spec_augmentation(s, anns, MosaicCrop(), RNG(0), extras=((s, anns),))
        with pytest.raises(ParameterError):
            apply_spec_augmentation(s, anns, SpecResize(), RNG(0), extras=((s, anns),) * 3)


class TestAllVariantsPreserveInvariants:
    @pytest.mark.parametrize("variant_cls", IQ_AUG_VARIANTS)
    def test_iq_variants(self, variant_cls):
        x = example_with([box(0.2, 0.5)], n=4096)
        y = apply_iq_augmentation(x, variant_cls(), RNG(11))
        assert y.num_samples == x.num_samples
        assert np.all(np.isfinite(y.iq))
        for ann in y.annotations:
            ann.validate()
