# Example-level RF impairments with annotation bookkeeping. Every transform
# returns a new example; inputs are never mutated.
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import signal as sps_sig

from .dsp import ParameterError, design_filter, FilterSpec, frequency_translate, resample
from .scenes import SignalAnnotation, WidebandExample

_F_EDGE = 0.5 - 1e-6


class RfImpairmentVariant(Enum):
    MAGNITUDE_RESCALE = "magnitude_rescale"
    RF_ROLLOFF = "rf_rolloff"
    RANDOM_CONVOLVE = "random_convolve"
    RAYLEIGH_FADING = "rayleigh_fading"
    DROP_SAMPLES = "drop_samples"
    PHASE_SHIFT = "phase_shift"
    IQ_IMBALANCE = "iq_imbalance"


RF_IMPAIRMENT_POOL = tuple(RfImpairmentVariant)

DROP_FILL_METHODS = ("ffill", "bfill", "mean", "zero")


@dataclass(frozen=True)
class ImpairmentConfig:
    """Pipeline probabilities and per-transform parameter ranges."""

    p_time_shift: float = 0.25
    p_freq_shift: float = 0.25
    p_resample: float = 0.25
    p_spectral_inversion: float = 0.50
    p_awgn: float = 1.00
    randaugment_count: int = 2
    p_magnitude_rescale_conditional: float = 0.50
    pool: tuple[RfImpairmentVariant, ...] = RF_IMPAIRMENT_POOL

    time_shift_fraction: float = 0.10
    freq_shift_range: tuple[float, float] = (-0.2, 0.2)
    resample_rate_range: tuple[float, float] = (0.75, 1.5)
    awgn_power_db_range: tuple[float, float] = (-10.0, 3.0)
    magnitude_rescale_range: tuple[float, float] = (0.5, 2.0)
    rolloff_edge_fraction: tuple[float, float] = (0.02, 0.05)
    convolve_taps_range: tuple[int, int] = (2, 5)
    convolve_alpha_range: tuple[float, float] = (0.1, 0.9)
    rayleigh_taps_range: tuple[int, int] = (2, 20)
    drop_rate_range: tuple[float, float] = (0.0005, 0.01)
    drop_size_range: tuple[int, int] = (1, 64)
    phase_range: tuple[float, float] = (-np.pi, np.pi)
    iq_amplitude_db: float = 3.0
    iq_phase_deg: float = 5.0
    iq_dc_fraction: float = 0.05

    def validate(self) -> None:
        for p in (self.p_time_shift, self.p_freq_shift, self.p_resample,
                  self.p_spectral_inversion, self.p_awgn,
                  self.p_magnitude_rescale_conditional):
            if not (0.0 <= p <= 1.0):
                raise ParameterError("impairment probabilities must be in [0, 1]")
        if not (0 <= self.randaugment_count <= len(self.pool)):
            raise ParameterError("randaugment_count exceeds the variant pool")


def _noise(n: int, psd: float, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(psd / 2) * rng.standard_normal(2 * n).view(np.complex128)


def _clip_time(ann: SignalAnnotation) -> SignalAnnotation | None:
    t0 = max(ann.t_start, 0.0)
    t1 = min(ann.t_start + ann.duration, 1.0)
    if t1 - t0 <= 1e-9:
        return None
    ann.t_start, ann.duration = t0, t1 - t0
    return ann


def _clip_freq(ann: SignalAnnotation) -> SignalAnnotation | None:
    lo = max(ann.f_lo, -_F_EDGE)
    hi = min(ann.f_hi, _F_EDGE)
    if hi - lo <= 1e-9:
        return None
    ann.f_center, ann.bandwidth = (lo + hi) / 2, hi - lo
    return ann


# ---------------------------------------------------------------------------
# The five example-level impairments
# ---------------------------------------------------------------------------

def time_shift(x: WidebandExample, shift: int, rng: np.random.Generator) -> WidebandExample:
    """Shift samples by `shift`, refilling the vacated span with floor noise
    and moving every annotation by the same fraction."""
    n = x.num_samples
    if abs(shift) >= n:
        raise ParameterError("shift magnitude must be below the example length")
    if shift == 0:
        return x.with_()
    iq = np.empty_like(x.iq)
    if shift > 0:
        iq[shift:] = x.iq[: n - shift]
        iq[:shift] = _noise(shift, x.noise_psd, rng)
    else:
        iq[:shift] = x.iq[-shift:]
        iq[shift:] = _noise(-shift, x.noise_psd, rng)
    frac = shift / n
    anns = []
    for ann in x.annotations:
        moved = ann.copy()
        moved.t_start += frac
        clipped = _clip_time(moved)
        if clipped is not None:
            anns.append(clipped)
    return x.with_(iq=iq, annotations=anns)


def frequency_shift(x: WidebandExample, f0: float) -> WidebandExample:
    """Shift all content by f0 cycles/sample. When any annotation would
    cross a band edge, the example is upsampled, shifted, filtered, and
    downsampled so nothing aliases back in; boxes are clipped to the band."""
    if abs(f0) > 0.5:
        raise ParameterError("|f0| must be <= 0.5")
    if f0 == 0.0:
        return x.with_()
    crosses = any(a.f_lo + f0 < -_F_EDGE or a.f_hi + f0 > _F_EDGE for a in x.annotations)
    if crosses:
        up = resample(x.iq, 2.0)
        up = frequency_translate(up, f0 / 2.0)
        iq = resample(up, 0.5)
        if iq.size != x.num_samples:  # guard against rounding drift
            iq = np.pad(iq, (0, max(0, x.num_samples - iq.size)))[: x.num_samples]
    else:
        iq = frequency_translate(x.iq, f0)
    anns = []
    for ann in x.annotations:
        moved = ann.copy()
        moved.f_center += f0
        clipped = _clip_freq(moved)
        if clipped is not None:
            anns.append(clipped)
    return x.with_(iq=iq, annotations=anns)


def random_resample(x: WidebandExample, rate: float, rng: np.random.Generator) -> WidebandExample:
    """Resample by `rate` (clamped so no annotation leaves the band), then
    pad with floor noise or truncate back to the original length."""
    if rate <= 0:
        raise ParameterError("rate must be positive")
    if x.annotations:
        edge = max(max(abs(a.f_lo), abs(a.f_hi)) for a in x.annotations)
        rate = max(rate, edge / _F_EDGE)
    if abs(rate - 1.0) < 1e-12:
        return x.with_()
    n = x.num_samples
    out = resample(x.iq, rate)
    if out.size >= n:
        iq = out[:n]
    else:
        iq = np.concatenate([out, _noise(n - out.size, x.noise_psd, rng)])
    anns = []
    for ann in x.annotations:
        moved = ann.copy()
        moved.t_start *= rate
        moved.duration *= rate
        moved.f_center /= rate
        moved.bandwidth /= rate
        clipped = _clip_time(moved)
        if clipped is not None:
            clipped = _clip_freq(clipped)
        if clipped is not None:
            anns.append(clipped)
    return x.with_(iq=iq, annotations=anns)


def spectral_inversion(x: WidebandExample) -> WidebandExample:
    """Conjugate the samples, mirroring the spectrum; f_center negates."""
    anns = []
    for ann in x.annotations:
        flipped = ann.copy()
        flipped.f_center = -flipped.f_center
        anns.append(flipped)
    return x.with_(iq=np.conj(x.iq), annotations=anns)


def add_awgn(x: WidebandExample, added_noise_db: float, rng: np.random.Generator) -> WidebandExample:
    """Add white noise at `added_noise_db` relative to the current floor;
    every annotation's Es/N0 drops by the floor-growth factor."""
    if added_noise_db == -np.inf:
        return x.with_()
    psd = x.noise_psd
    p_add = psd * 10.0 ** (added_noise_db / 10.0)
    iq = x.iq + _noise(x.num_samples, p_add, rng)
    penalty_db = 10.0 * np.log10(1.0 + p_add / psd)
    anns = []
    for ann in x.annotations:
        quieter = ann.copy()
        quieter.snr_db -= penalty_db
        anns.append(quieter)
    return x.with_(iq=iq, annotations=anns, noise_psd=psd + p_add)


# ---------------------------------------------------------------------------
# RandAugment pool of seven RF effects (annotations untouched)
# ---------------------------------------------------------------------------

def _magnitude_rescale(iq, cfg, rng):
    t0 = int(rng.integers(0, iq.size))
    gain = rng.uniform(*cfg.magnitude_rescale_range)
    out = iq.copy()
    out[t0:] *= gain
    return out


def _rf_rolloff(iq, cfg, rng):
    delta = rng.uniform(*cfg.rolloff_edge_fraction)
    mode = ("low", "high", "both")[int(rng.integers(0, 3))]
    if mode == "both":
        cutoff, center = 0.5 - delta, 0.0
    elif mode == "high":
        cutoff, center = 0.5 - delta / 2, -delta / 2
    else:
        cutoff, center = 0.5 - delta / 2, delta / 2
    taps = design_filter(FilterSpec("lowpass", cutoff=cutoff, num_taps=129))
    shifted = taps * np.exp(2j * np.pi * center * np.arange(taps.size))
    return sps_sig.oaconvolve(iq, shifted, mode="same")


def _random_convolve(iq, cfg, rng):
    n_taps = int(rng.integers(cfg.convolve_taps_range[0], cfg.convolve_taps_range[1] + 1))
    alpha = rng.uniform(*cfg.convolve_alpha_range)
    taps = rng.random(n_taps)
    taps /= taps.sum()
    return alpha * sps_sig.oaconvolve(iq, taps, mode="same") + (1.0 - alpha) * iq


def _rayleigh_fading(iq, cfg, rng):
    n_taps = int(rng.integers(cfg.rayleigh_taps_range[0], cfg.rayleigh_taps_range[1] + 1))
    taps = rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps)
    taps /= np.linalg.norm(taps)
    return sps_sig.oaconvolve(iq, taps, mode="same")


def drop_regions(
    n: int, rate: float, size: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    count = max(1, int(round(rate * n / size)))
    starts = np.sort(rng.integers(0, max(1, n - size), size=count))
    return [(int(s), min(int(s) + size, n)) for s in starts]


def fill_dropped(iq: np.ndarray, regions: list[tuple[int, int]], method: str) -> np.ndarray:
    out = iq.copy()
    mean_val = iq.mean()
    for (a, b) in regions:
        if method == "zero":
            out[a:b] = 0.0
        elif method == "mean":
            out[a:b] = mean_val
        elif method == "ffill":
            out[a:b] = out[a - 1] if a > 0 else (out[b] if b < out.size else 0.0)
        elif method == "bfill":
            out[a:b] = out[b] if b < out.size else (out[a - 1] if a > 0 else 0.0)
        else:
            raise ParameterError(f"unknown fill method {method!r}")
    return out


def _drop_samples(iq, cfg, rng):
    rate = rng.uniform(*cfg.drop_rate_range)
    size = int(rng.integers(cfg.drop_size_range[0], cfg.drop_size_range[1] + 1))
    method = DROP_FILL_METHODS[int(rng.integers(0, len(DROP_FILL_METHODS)))]
    return fill_dropped(iq, drop_regions(iq.size, rate, size, rng), method)


def _phase_shift(iq, cfg, rng):
    return iq * np.exp(1j * rng.uniform(*cfg.phase_range))


def _iq_imbalance(iq, cfg, rng):
    amp_db = rng.uniform(-cfg.iq_amplitude_db, cfg.iq_amplitude_db)
    phase = np.deg2rad(rng.uniform(-cfg.iq_phase_deg, cfg.iq_phase_deg))
    rms = np.sqrt(np.mean(np.abs(iq) ** 2)) or 1.0
    dc = cfg.iq_dc_fraction * rms * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
    gain_i = 10.0 ** (amp_db / 40.0)
    gain_q = 10.0 ** (-amp_db / 40.0)
    i_part = gain_i * iq.real
    q_part = gain_q * (iq.imag * np.cos(phase) + iq.real * np.sin(phase))
    return i_part + 1j * q_part + dc


_RF_IMPAIRMENT_FNS = {
    RfImpairmentVariant.MAGNITUDE_RESCALE: _magnitude_rescale,
    RfImpairmentVariant.RF_ROLLOFF: _rf_rolloff,
    RfImpairmentVariant.RANDOM_CONVOLVE: _random_convolve,
    RfImpairmentVariant.RAYLEIGH_FADING: _rayleigh_fading,
    RfImpairmentVariant.DROP_SAMPLES: _drop_samples,
    RfImpairmentVariant.PHASE_SHIFT: _phase_shift,
    RfImpairmentVariant.IQ_IMBALANCE: _iq_imbalance,
}


def apply_rf_impairment(
    x: WidebandExample,
    variant: RfImpairmentVariant,
    rng: np.random.Generator,
    cfg: ImpairmentConfig | None = None,
) -> WidebandExample:
    """Apply one pool variant with parameters drawn from the config ranges.
    These effects never move annotation boxes."""
    cfg = cfg or ImpairmentConfig()
    try:
        fn = _RF_IMPAIRMENT_FNS[RfImpairmentVariant(variant)]
    except (KeyError, ValueError):
        raise ParameterError(f"unknown RF impairment {variant!r}") from None
    return x.with_(iq=np.ascontiguousarray(fn(x.iq, cfg, rng)))


def rand_augment(
    x: WidebandExample, cfg: ImpairmentConfig, rng: np.random.Generator
) -> WidebandExample:
    """Draw `randaugment_count` distinct pool variants and apply them in
    draw order. Magnitude rescale only fires half the time it is drawn."""
    cfg.validate()
    if cfg.randaugment_count == 0:
        return x.with_()
    picks = rng.choice(len(cfg.pool), size=cfg.randaugment_count, replace=False)
    out = x
    for idx in picks:
        variant = cfg.pool[int(idx)]
        if variant is RfImpairmentVariant.MAGNITUDE_RESCALE:
            if rng.random() >= cfg.p_magnitude_rescale_conditional:
                continue
        out = apply_rf_impairment(out, variant, rng, cfg)
    return out if out is not x else x.with_()


def impair_example(
    x: WidebandExample, cfg: ImpairmentConfig, rng: np.random.Generator
) -> WidebandExample:
    """The full impairment pipeline: time shift (25%), frequency shift
    (25%), random resample (25%), spectral inversion (50%), RandAugment,
    then AWGN (100%)."""
    cfg.validate()
    out = x
    n = x.num_samples
    if rng.random() < cfg.p_time_shift:
        span = int(round(cfg.time_shift_fraction * n))
        shift = int(rng.integers(-span, span + 1)) if span else 0
        out = time_shift(out, shift, rng)
    if rng.random() < cfg.p_freq_shift:
        out = frequency_shift(out, float(rng.uniform(*cfg.freq_shift_range)))
    if rng.random() < cfg.p_resample:
        out = random_resample(out, float(rng.uniform(*cfg.resample_rate_range)), rng)
    if rng.random() < cfg.p_spectral_inversion:
        out = spectral_inversion(out)
    out = rand_augment(out, cfg, rng)
    if rng.random() < cfg.p_awgn:
        out = add_awgn(out, float(rng.uniform(*cfg.awgn_power_db_range)), rng)
    return out.with_(impaired=True)
