from __future__ import annotations

import numpy as np
import pytest

from rfscene.dsp import ParameterError, _rrc_taps
from rfscene.modem import (
    LINEAR_FAMILIES,
    FskSpec,
    LinearModSpec,
    ModFamily,
    OfdmSpec,
    SignalClass,
    _ofdm_grid,
    _ofdm_to_time,
    build_constellation,
    class_from_label,
    class_to_family,
    classes_in_family,
    fsk_spec_for_class,
    synthesize_class,
    synthesize_fsk,
    synthesize_linear,
    synthesize_ofdm,
)
from oracles import energy_bandwidth, linear_loopback_ser, mid_symbol_freqs


class TestClassTable:
    def test_bijection(self):
        indices = sorted(int(c) for c in SignalClass)
        assert indices == list(range(53))

    @pytest.mark.parametrize(
        "label,index",
        [
            ("ook", 0), ("bpsk", 1), ("4pam", 2), ("4ask", 3), ("qpsk", 4),
            ("8pam", 5), ("8ask", 6), ("8psk", 7), ("16qam", 8), ("16pam", 9),
            ("16ask", 10), ("16psk", 11), ("32qam", 12), ("32qam_cross", 13),
            ("32pam", 14), ("32ask", 15), ("32psk", 16), ("64qam", 17),
            ("64pam", 18), ("64ask", 19), ("64psk", 20), ("128qam_cross", 21),
            ("256qam", 22), ("512qam_cross", 23), ("1024qam", 24), ("2fsk", 25),
            ("2gfsk", 26), ("2msk", 27), ("2gmsk", 28), ("4fsk", 29),
            ("16gmsk", 40), ("ofdm-64", 41), ("ofdm-600", 48), ("ofdm-2048", 52),
        ],
    )
    def test_exact_indices(self, label, index):
        assert int(class_from_label(label)) == index

    def test_family_mapping(self):
        assert class_to_family(SignalClass.OOK) is ModFamily.PAM
        assert class_to_family(SignalClass.GMSK2) is ModFamily.FSK
        assert class_to_family(SignalClass.OFDM_600) is ModFamily.OFDM
        assert class_to_family(SignalClass.QAM256) is ModFamily.QAM
        assert class_to_family(SignalClass.ASK64) is ModFamily.ASK
        assert class_to_family(SignalClass.PSK64) is ModFamily.PSK

    def test_six_families_cover_all(self):
        assert len(ModFamily) == 6
        total = sum(len(classes_in_family(f)) for f in ModFamily)
        assert total == 53
        assert len(classes_in_family(ModFamily.OFDM)) == 12
        assert len(classes_in_family(ModFamily.FSK)) == 16


class TestConstellations:
    def test_bpsk(self):
        pts = build_constellation(SignalClass.BPSK)
        assert sorted(pts.real.tolist()) == [-1.0, 1.0]
        assert np.allclose(pts.imag, 0)

    def test_ook(self):
        pts = np.sort(np.abs(build_constellation(SignalClass.OOK)))
        assert abs(pts[0]) < 1e-12
        assert abs(pts[1] - np.sqrt(2)) < 1e-12

    def test_16qam_grid(self):
        pts = build_constellation(SignalClass.QAM16)
        assert pts.size == 16
        assert len(set(np.round(pts.real, 9))) == 4
        assert len(set(np.round(pts.imag, 9))) == 4
        assert abs(np.mean(np.abs(pts) ** 2) - 1.0) < 1e-9

    @pytest.mark.parametrize("cls", [c for c in SignalClass if class_to_family(c) in LINEAR_FAMILIES])
    def test_order_and_energy(self, cls):
        pts = build_constellation(cls)
        assert pts.size == cls.order
        assert abs(np.mean(np.abs(pts) ** 2) - 1.0) < 1e-9
        assert len(np.unique(np.round(pts, 9))) == cls.order

    def test_cross_shapes_have_no_corners(self):
        pts = build_constellation(SignalClass.QAM32_CROSS)
        radius = np.max(np.abs(pts.real))
        corners = (np.abs(pts.real) == radius) & (np.abs(pts.imag) == radius)
        assert pts.size == 32 and not corners.any()

    def test_fsk_and_ofdm_rejected(self):
        with pytest.raises(ParameterError):
            build_constellation(SignalClass.FSK2)
        with pytest.raises(ParameterError):
            build_constellation(SignalClass.OFDM_64)


class TestLinear:
    def test_loopback_qpsk(self):
        ser = linear_loopback_ser(build_constellation(SignalClass.QPSK), 500, np.random.default_rng(3))
        assert ser == 0.0

    def test_mean_power(self):
        rng = np.random.default_rng(5)
        for cls in (SignalClass.OOK, SignalClass.QAM64, SignalClass.PSK16):
            spec = LinearModSpec(build_constellation(cls), 4.0, 0.35)
            x = synthesize_linear(spec, 2000, rng)
            assert abs(np.mean(np.abs(x) ** 2) - 1.0) < 0.1

    def test_single_impulse_is_scaled_taps(self):
        spec = LinearModSpec(build_constellation(SignalClass.BPSK), 4.0, 0.25)
        x = synthesize_linear(spec, 1, np.random.default_rng(0), symbols=np.array([1.0 + 0j]))
        taps = _rrc_taps(33, 4, 0.25)
        assert np.allclose(x[:33], taps * 2.0)  # sqrt(sps) scaling
        assert np.allclose(x[33:], 0.0)

    def test_occupied_bandwidth(self):
        spec = LinearModSpec(build_constellation(SignalClass.QPSK), 8.0, 0.25)
        x = synthesize_linear(spec, 4000, np.random.default_rng(11))
        assert abs(energy_bandwidth(x, 0.99) - spec.occupied_bandwidth) / spec.occupied_bandwidth < 0.15

    def test_bad_spec(self):
        with pytest.raises(ParameterError):
            LinearModSpec(np.array([2.0 + 0j, -2.0 + 0j]), 4.0).validate()
        with pytest.raises(ParameterError):
            LinearModSpec(build_constellation(SignalClass.QPSK), 1.0).validate()


class TestFsk:
    def test_two_tone_discriminator(self):
        spec = FskSpec(levels=2, samples_per_symbol=8, mod_index=1.0)
        x = synthesize_fsk(spec, 1000, np.random.default_rng(7))
        freqs = mid_symbol_freqs(x, 8)
        expected = 1.0 / (2 * 8)
        hi, lo = freqs[freqs > 0], freqs[freqs < 0]
        assert hi.size > 100 and lo.size > 100
        assert abs(hi.mean() - expected) / expected < 0.05
        assert abs(lo.mean() + expected) / expected < 0.05

    def test_four_levels(self):
        spec = FskSpec(levels=4, samples_per_symbol=16, mod_index=1.0)
        x = synthesize_fsk(spec, 2000, np.random.default_rng(8))
        freqs = mid_symbol_freqs(x, 16)
        clusters = np.unique(np.round(freqs * 2 * 16, 1))
        assert np.allclose(np.sort(clusters), [-3, -1, 1, 3])

    def test_constant_envelope(self):
        for bt in (None, 0.4):
            spec = FskSpec(levels=8, samples_per_symbol=32, mod_index=1.0, gaussian_bt=bt)
            x = synthesize_fsk(spec, 200, np.random.default_rng(9))
            assert np.max(np.abs(np.abs(x) - 1.0)) < 1e-6

    def test_phase_continuity(self):
        spec = FskSpec(levels=16, samples_per_symbol=32, mod_index=1.0)
        x = synthesize_fsk(spec, 500, np.random.default_rng(10))
        dphi = np.abs(np.angle(x[1:] * np.conj(x[:-1])))
        assert dphi.max() <= np.pi

    def test_msk_classes_force_half_index(self):
        rng = np.random.default_rng(2)
        for cls in (SignalClass.MSK2, SignalClass.GMSK4, SignalClass.MSK16):
            assert fsk_spec_for_class(cls, 64, rng).mod_index == 0.5
        assert fsk_spec_for_class(SignalClass.FSK4, 64, rng).mod_index == 1.0
        assert fsk_spec_for_class(SignalClass.GFSK2, 64, rng).gaussian_bt is not None

    def test_deviation_exceeding_band_rejected(self):
        with pytest.raises(ParameterError):
            FskSpec(levels=16, samples_per_symbol=8, mod_index=1.0).validate()


class TestOfdm:
    def test_cyclic_prefix_equality(self):
        spec = OfdmSpec(num_subcarriers=64, cp_ratio=0.125)
        x = synthesize_ofdm(spec, 4, np.random.default_rng(12))
        sym_len, cp, n = spec.symbol_length, spec.cp_length, spec.fft_size
        for k in range(4):
            sym = x[k * sym_len : (k + 1) * sym_len]
            assert np.allclose(sym[:cp], sym[cp + n - cp :], atol=1e-12)

    def test_dc_subcarrier_off(self):
        spec = OfdmSpec(num_subcarriers=128, cp_ratio=0.0, dc_subcarrier=False)
        grid = _ofdm_grid(spec, 6, np.random.default_rng(13))
        x = _ofdm_to_time(grid, spec)
        demod = np.fft.fft(x.reshape(6, spec.fft_size), axis=1)
        mean_bin = np.mean(np.abs(demod) ** 2)
        assert np.max(np.abs(demod[:, 0]) ** 2) < 1e-9 * mean_bin

    def test_occupied_bandwidth(self):
        spec = OfdmSpec(num_subcarriers=64, cp_ratio=0.0)
        x = synthesize_ofdm(spec, 8, np.random.default_rng(14))
        expected = 64 / spec.fft_size
        assert abs(energy_bandwidth(x, 0.99) - expected) / expected < 0.10

    def test_subcarrier_recovery(self):
        spec = OfdmSpec(num_subcarriers=256, cp_ratio=0.125)
        grid = _ofdm_grid(spec, 10, np.random.default_rng(15))
        x = _ofdm_to_time(grid, spec)
        sym_len, cp, n = spec.symbol_length, spec.cp_length, spec.fft_size
        body = x.reshape(10, sym_len)[:, cp:]
        demod = np.fft.fft(body, axis=1)
        bins = spec.occupied_bins()
        scale = demod[0, bins[0]] / grid[0, bins[0]]
        assert np.max(np.abs(demod[:, bins] - scale * grid[:, bins])) < 1e-6

    def test_feature_flags_change_grid(self):
        base = OfdmSpec(num_subcarriers=300, enable_pilots=True,
                        enable_resource_blocks=True, enable_bursty_symbols=True)
        x = synthesize_ofdm(base, 12, np.random.default_rng(16))
        assert np.all(np.isfinite(x))

    def test_bad_subcarrier_count(self):
        with pytest.raises(ParameterError):
            OfdmSpec(num_subcarriers=100).validate()


class TestAllClasses:
    @pytest.mark.parametrize("cls", list(SignalClass))
    def test_synthesis_coverage(self, cls):
        x = synthesize_class(cls, 4096, np.random.default_rng(100 + int(cls)))
        assert x.size == 4096
        assert np.all(np.isfinite(x))
        assert 0.5 <= np.mean(np.abs(x) ** 2) <= 2.0
