# Training-time augmentations: IQ-domain transforms, example mixing, and
# spectrogram-domain transforms, each with annotation bookkeeping.
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dsp import ParameterError, blackman_harris
from .scenes import SignalAnnotation, WidebandExample

_F_EDGE = 0.5 - 1e-6


# ---------------------------------------------------------------------------
# IQ-domain variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TimeReversal:
    undo_spectral_inversion: bool = False


@dataclass(frozen=True)
class ChannelSwap:
    pass


@dataclass(frozen=True)
class AmplitudeReversal:
    pass


@dataclass(frozen=True)
class Quantize:
    levels: int = 32
    rounding: str = "floor"  # floor | middle | ceiling


@dataclass(frozen=True)
class CutOut:
    duration: float = 0.05
    fill: str = "zeros"  # zeros | ones | low_noise | avg_noise | high_noise
    start: float | None = None  # drawn uniformly when None


@dataclass(frozen=True)
class PatchShuffle:
    patch_size: int = 8
    shuffle_ratio: float = 0.25


@dataclass(frozen=True)
class LoDrift:
    drift_rate: float = 1e-5  # per-sample random-walk step, cycles/sample
    max_drift: float = 1e-3  # offset resets to 0 when the walk exceeds this


@dataclass(frozen=True)
class TimeVaryingNoise:
    snr_low_db: float = -6.0  # added-noise power range relative to the floor
    snr_high_db: float = 3.0
    inflections: int = 3


@dataclass(frozen=True)
class Clip:
    fraction: float = 0.85


@dataclass(frozen=True)
class AddSlope:
    pass


@dataclass(frozen=True)
class GainDrift:
    drift_rate_db: float = 0.001
    max_drift_db: float = 1.0


@dataclass(frozen=True)
class Agc:
    initial_gain_db: float = 0.0
    alpha_smooth: float = 0.1
    alpha_track: float = 0.01
    alpha_overflow: float = 0.2
    alpha_acquire: float = 0.05
    ref_level_db: float = 0.0
    track_range_db: float = 3.0
    low_level_db: float = -40.0
    high_level_db: float = 12.0


IQ_AUG_VARIANTS = (
    TimeReversal, ChannelSwap, AmplitudeReversal, Quantize, CutOut, PatchShuffle,
    LoDrift, TimeVaryingNoise, Clip, AddSlope, GainDrift, Agc,
)


def bounded_random_walk(increments: np.ndarray, limit: float) -> np.ndarray:
    """Cumulative walk that resets to exactly 0 whenever |walk| would pass
    `limit`; the returned magnitude therefore never exceeds the limit."""
    walk = np.cumsum(increments)
    out = np.empty_like(walk)
    offset = 0.0
    pos = 0
    while True:
        seg = walk[pos:] - offset
        bad = np.flatnonzero(np.abs(seg) > limit)
        if bad.size == 0:
            out[pos:] = seg
            return out
        b = int(bad[0])
        out[pos : pos + b] = seg[:b]
        out[pos + b] = 0.0
        offset = walk[pos + b]
        pos += b + 1
        if pos >= walk.size:
            return out


def subtract_interval(anns: list[SignalAnnotation], a: float, b: float) -> list[SignalAnnotation]:
    """Remove [a, b) from every annotation's time extent, splitting boxes
    that straddle it and deleting boxes it covers."""
    out: list[SignalAnnotation] = []
    for ann in anns:
        t0, t1 = ann.t_start, ann.t_stop
        for (p0, p1) in ((t0, min(t1, a)), (max(t0, b), t1)):
            if p1 - p0 > 1e-9:
                piece = ann.copy()
                if p0 != t0 or p1 != t1:
                    piece.t_start, piece.duration = p0, p1 - p0
                out.append(piece)
    return out


def _intersect_interval(anns: list[SignalAnnotation], a: float, b: float) -> list[SignalAnnotation]:
    out = []
    for ann in anns:
        t0, t1 = max(ann.t_start, a), min(ann.t_stop, b)
        if t1 - t0 > 1e-9:
            piece = ann.copy()
            if t0 != ann.t_start or t1 != ann.t_stop:
                piece.t_start, piece.duration = t0, t1 - t0
            out.append(piece)
    return out


def _cut_fill(n: int, fill: str, psd: float, rng: np.random.Generator) -> np.ndarray:
    if fill == "zeros":
        return np.zeros(n, dtype=complex)
    if fill == "ones":
        return np.ones(n, dtype=complex)
    scale = {"low_noise": 0.1, "avg_noise": 1.0, "high_noise": 10.0}.get(fill)
    if scale is None:
        raise ParameterError(f"unknown CutOut fill {fill!r}")
    return np.sqrt(scale * psd / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def _quantize_axis(v: np.ndarray, levels: int, rounding: str) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        return v.copy()
    step = (hi - lo) / levels
    idx = np.clip(np.floor((v - lo) / step), 0, levels - 1)
    offset = {"floor": 0.0, "middle": 0.5, "ceiling": 1.0}.get(rounding)
    if offset is None:
        raise ParameterError(f"unknown rounding {rounding!r}")
    return lo + (idx + offset) * step


def _agc_gains(mag_db: np.ndarray, p: Agc) -> np.ndarray:
    gains = np.empty(mag_db.size)
    gain = p.initial_gain_db
    level = mag_db[0] if mag_db.size else 0.0
    for i in range(mag_db.size):
        level = (1 - p.alpha_smooth) * level + p.alpha_smooth * mag_db[i]
        effective = level + gain
        if level < p.low_level_db:
            alpha = 0.0
        elif effective > p.high_level_db:
            alpha = p.alpha_overflow
        elif abs(p.ref_level_db - effective) > p.track_range_db:
            alpha = p.alpha_acquire
        else:
            alpha = p.alpha_track
        gain += alpha * (p.ref_level_db - effective)
        gains[i] = gain
    return gains


def apply_iq_augmentation(x: WidebandExample, variant, rng: np.random.Generator) -> WidebandExample:
    """Apply one IQ-domain augmentation.

    Time reversal and CutOut adjust boxes (mirror / split); every other
    variant leaves the annotations untouched.
    """
    iq = x.iq
    if isinstance(variant, TimeReversal):
        out = np.conj(iq[::-1]) if variant.undo_spectral_inversion else iq[::-1].copy()
        anns = []
        for ann in x.annotations:
            moved = ann.copy()
            moved.t_start = 1.0 - ann.t_start - ann.duration
            if not variant.undo_spectral_inversion:
                moved.f_center = -moved.f_center
            anns.append(moved)
        return x.with_(iq=out, annotations=anns)
    if isinstance(variant, ChannelSwap):
        return x.with_(iq=iq.imag + 1j * iq.real)
    if isinstance(variant, AmplitudeReversal):
        return x.with_(iq=-iq)
    if isinstance(variant, Quantize):
        return x.with_(
            iq=_quantize_axis(iq.real, variant.levels, variant.rounding)
            + 1j * _quantize_axis(iq.imag, variant.levels, variant.rounding)
        )
    if isinstance(variant, CutOut):
        start = float(rng.uniform(0.0, 1.0 - variant.duration)) if variant.start is None else variant.start
        a, b = start, min(start + variant.duration, 1.0)
        i0, i1 = int(round(a * iq.size)), int(round(b * iq.size))
        out = iq.copy()
        out[i0:i1] = _cut_fill(i1 - i0, variant.fill, x.noise_psd, rng)
        return x.with_(iq=out, annotations=subtract_interval(x.annotations, a, b))
    if isinstance(variant, PatchShuffle):
        out = iq.copy()
        p = variant.patch_size
        n_patches = iq.size // p
        chosen = np.flatnonzero(rng.random(n_patches) < variant.shuffle_ratio)
        for c in chosen:
            seg = slice(c * p, (c + 1) * p)
            out[seg] = out[seg][rng.permutation(p)]
        return x.with_(iq=out)
    if isinstance(variant, LoDrift):
        steps = rng.normal(0.0, variant.drift_rate, size=iq.size)
        offsets = bounded_random_walk(steps, variant.max_drift)
        return x.with_(iq=iq * np.exp(2j * np.pi * np.cumsum(offsets)))
    if isinstance(variant, TimeVaryingNoise):
        k = variant.inflections
        anchors = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, size=k)), [1.0]])
        values = np.where(np.arange(k + 2) % 2 == 0, variant.snr_low_db, variant.snr_high_db)
        profile_db = np.interp(np.linspace(0, 1, iq.size), anchors, values)
        power = x.noise_psd * 10.0 ** (profile_db / 10.0)
        noise = np.sqrt(power / 2) * (rng.standard_normal(iq.size) + 1j * rng.standard_normal(iq.size))
        return x.with_(iq=iq + noise)
    if isinstance(variant, Clip):
        f = variant.fraction
        re = np.clip(iq.real, f * iq.real.min(), f * iq.real.max())
        im = np.clip(iq.imag, f * iq.imag.min(), f * iq.imag.max())
        return x.with_(iq=re + 1j * im)
    if isinstance(variant, AddSlope):
        out = iq.copy()
        out[1:] += np.diff(iq)
        return x.with_(iq=out)
    if isinstance(variant, GainDrift):
        steps = rng.normal(0.0, variant.drift_rate_db, size=iq.size)
        walk_db = bounded_random_walk(steps, variant.max_drift_db)
        return x.with_(iq=iq * 10.0 ** (walk_db / 20.0))
    if isinstance(variant, Agc):
        mag_db = 20.0 * np.log10(np.abs(iq) + 1e-30)
        gains = _agc_gains(mag_db, variant)
        return x.with_(iq=iq * 10.0 ** (gains / 20.0))
    raise ParameterError(f"unknown IQ augmentation {variant!r}")


# ---------------------------------------------------------------------------
# Example mixing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixUp:
    weight: float = 0.5  # secondary example's amplitude weight


@dataclass(frozen=True)
class CutMix:
    start: float = 0.25
    stop: float = 0.75


def mix_augmentation(
    x: WidebandExample, y: WidebandExample, variant, rng: np.random.Generator
) -> WidebandExample:
    """Blend a secondary example into the primary one.

    MixUp adds the weighted secondary samples and takes the union of the
    labels; CutMix replaces a time region wholesale, splitting boxes at the
    region boundary.
    """
    if x.num_samples != y.num_samples:
        raise ParameterError("mixed examples must have equal length")
    if isinstance(variant, MixUp):
        w = variant.weight
        if not (0.0 <= w < 1.0):
            raise ParameterError("MixUp weight must be in [0, 1)")
        if w == 0.0:
            return x.with_()
        iq = x.iq + w * y.iq
        anns = [a.copy() for a in x.annotations] + [a.copy() for a in y.annotations]
        return x.with_(iq=iq, annotations=anns,
                       noise_psd=x.noise_psd + w * w * y.noise_psd)
    if isinstance(variant, CutMix):
        a, b = variant.start, variant.stop
        if not (0.0 <= a < b <= 1.0):
            raise ParameterError("CutMix region must satisfy 0 <= start < stop <= 1")
        n = x.num_samples
        i0, i1 = int(round(a * n)), int(round(b * n))
        iq = x.iq.copy()
        iq[i0:i1] = y.iq[i0:i1]
        anns = subtract_interval(x.annotations, a, b) + _intersect_interval(y.annotations, a, b)
        return x.with_(iq=iq, annotations=anns)
    raise ParameterError(f"unknown mix augmentation {variant!r}")


# ---------------------------------------------------------------------------
# Spectrogram-domain variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpecResize:
    height: int = 512
    width: int = 512


@dataclass(frozen=True)
class SpecDropSamples:
    rate: float = 0.01
    size: int = 4
    fill: str = "zero"  # ffill | bfill | mean | zero | low | min | max | ones


@dataclass(frozen=True)
class SpecPatchShuffle:
    patch_size: int = 8
    shuffle_ratio: float = 0.25


@dataclass(frozen=True)
class SpecTranslation:
    dt: int = 0  # columns (time)
    df: int = 0  # rows (frequency)


@dataclass(frozen=True)
class SpecRandomResizeCrop:
    fft_sizes: tuple[int, ...] = (256, 512, 1024)


@dataclass(frozen=True)
class MosaicCrop:
    origin: tuple[int, int] | None = None  # (row, col); drawn when None


@dataclass(frozen=True)
class MosaicDownsample:
    pass


SPEC_AUG_VARIANTS = (
    SpecResize, SpecDropSamples, SpecPatchShuffle, SpecTranslation,
    SpecRandomResizeCrop, MosaicCrop, MosaicDownsample,
)


def _median_bin_power(s: np.ndarray) -> float:
    return float(np.median(np.abs(s) ** 2))


def _spec_noise(shape, power: float, rng: np.random.Generator) -> np.ndarray:
    return np.sqrt(power / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _copy_anns(anns) -> list[SignalAnnotation]:
    return [a.copy() for a in anns]


def _remap_boxes(anns, t_scale, t_shift, f_scale, f_shift) -> list[SignalAnnotation]:
    """Affine remap in normalized coordinates with clipping; (f + 0.5)
    transforms like t does."""
    if (t_scale, t_shift, f_scale, f_shift) == (1.0, 0.0, 1.0, 0.0):
        return _copy_anns(anns)
    out = []
    for ann in anns:
        t0 = ann.t_start * t_scale + t_shift
        t1 = ann.t_stop * t_scale + t_shift
        g0 = (ann.f_lo + 0.5) * f_scale + f_shift - 0.5
        g1 = (ann.f_hi + 0.5) * f_scale + f_shift - 0.5
        t0, t1 = max(t0, 0.0), min(t1, 1.0)
        g0, g1 = max(g0, -_F_EDGE), min(g1, _F_EDGE)
        if t1 - t0 <= 1e-9 or g1 - g0 <= 1e-9:
            continue
        moved = ann.copy()
        moved.t_start, moved.duration = t0, t1 - t0
        moved.f_center, moved.bandwidth = (g0 + g1) / 2, g1 - g0
        out.append(moved)
    return out


def _resize(s, anns, height, width, rng):
    rows, cols = s.shape
    pad_power = _median_bin_power(s)
    out = _spec_noise((height, width), pad_power, rng)
    # time content keeps its origin; frequency content stays band-centered
    r0_dst = max(0, (height - rows) // 2)
    r0_src = max(0, (rows - height) // 2)
    n_rows = min(rows, height)
    n_cols = min(cols, width)
    out[r0_dst : r0_dst + n_rows, :n_cols] = s[r0_src : r0_src + n_rows, :n_cols]
    t_scale = cols / width
    f_scale = rows / height
    f_shift = (r0_dst - r0_src) / height
    return out, _remap_boxes(anns, t_scale, 0.0, f_scale, f_shift)


def _spec_drop(s, anns, v: SpecDropSamples, rng):
    flat = s.ravel().copy()
    n = flat.size
    count = max(1, int(round(v.rate * n / v.size)))
    starts = rng.integers(0, max(1, n - v.size), size=count)
    mags = np.abs(flat)
    fills = {
        "zero": 0.0,
        "ones": 1.0 + 0.0j,
        "mean": flat.mean(),
        "low": 0.01 * np.median(mags),
        "min": flat[int(np.argmin(mags))],
        "max": flat[int(np.argmax(mags))],
    }
    for a in np.sort(starts):
        a = int(a)
        b = min(a + v.size, n)
        if v.fill == "ffill":
            flat[a:b] = flat[a - 1] if a > 0 else 0.0
        elif v.fill == "bfill":
            flat[a:b] = flat[b] if b < n else 0.0
        elif v.fill in fills:
            flat[a:b] = fills[v.fill]
        else:
            raise ParameterError(f"unknown spectrogram fill {v.fill!r}")
    return flat.reshape(s.shape), _copy_anns(anns)


def _spec_patch_shuffle(s, anns, v: SpecPatchShuffle, rng):
    out = s.copy()
    p = v.patch_size
    for r in range(0, s.shape[0] - p + 1, p):
        for c in range(0, s.shape[1] - p + 1, p):
            if rng.random() < v.shuffle_ratio:
                block = out[r : r + p, c : c + p].ravel()
                out[r : r + p, c : c + p] = block[rng.permutation(block.size)].reshape(p, p)
    return out, _copy_anns(anns)


def _spec_translate(s, anns, v: SpecTranslation, rng):
    rows, cols = s.shape
    if abs(v.dt) >= cols or abs(v.df) >= rows:
        raise ParameterError("translation exceeds the spectrogram extent")
    pad_power = _median_bin_power(s)
    out = _spec_noise(s.shape, pad_power, rng)
    src_r = slice(max(0, -v.df), rows - max(0, v.df))
    dst_r = slice(max(0, v.df), rows - max(0, -v.df))
    src_c = slice(max(0, -v.dt), cols - max(0, v.dt))
    dst_c = slice(max(0, v.dt), cols - max(0, -v.dt))
    out[dst_r, dst_c] = s[src_r, src_c]
    return out, _remap_boxes(anns, 1.0, v.dt / cols, 1.0, v.df / rows)


def _spec_rrc(s, anns, v: SpecRandomResizeCrop, rng, iq):
    if iq is None:
        raise ParameterError("SpecRandomResizeCrop requires the source IQ buffer")
    fft = int(v.fft_sizes[int(rng.integers(0, len(v.fft_sizes)))])
    nseg = iq.size // fft
    frames = iq[: nseg * fft].reshape(nseg, fft)
    spec = np.fft.fftshift(np.fft.fft(frames * blackman_harris(fft), axis=1), axes=1).T
    target_r, target_c = s.shape
    boxes = _copy_anns(anns)
    rows, cols = spec.shape
    if cols > target_c:  # random time crop
        c0 = int(rng.integers(0, cols - target_c + 1))
        spec = spec[:, c0 : c0 + target_c]
        boxes = _remap_boxes(boxes, cols / target_c, -c0 / target_c, 1.0, 0.0)
        cols = target_c
    if rows > target_r:  # centered frequency crop
        r0 = (rows - target_r) // 2
        spec = spec[r0 : r0 + target_r, :]
        boxes = _remap_boxes(boxes, 1.0, 0.0, rows / target_r, -r0 / target_r)
        rows = target_r
    out, boxes = _resize(spec, boxes, target_r, target_c, rng)
    return out, boxes


def _mosaic_grid(panes):
    (s0, s1, s2, s3) = panes
    top = np.concatenate([s0, s1], axis=1)
    bottom = np.concatenate([s2, s3], axis=1)
    return np.concatenate([top, bottom], axis=0)


def _mosaic_crop(s, anns, v: MosaicCrop, rng, extras):
    panes = [s] + [e[0] for e in extras]
    all_anns = [anns] + [e[1] for e in extras]
    rows, cols = s.shape
    grid = _mosaic_grid(panes)
    if v.origin is None:
        oy, ox = int(rng.integers(0, rows + 1)), int(rng.integers(0, cols + 1))
    else:
        oy, ox = v.origin
    window = grid[oy : oy + rows, ox : ox + cols]
    boxes: list[SignalAnnotation] = []
    for q, pane_anns in enumerate(all_anns):
        qr, qc = divmod(q, 2)
        # pane -> grid (scale 0.5 + quadrant offset) -> crop window (x2)
        t_shift = qc * 0.5 - ox / (2 * cols)
        f_shift = qr * 0.5 - oy / (2 * rows)
        boxes.extend(_remap_boxes(pane_anns, 1.0, 2 * t_shift, 1.0, 2 * f_shift))
    return window.copy(), boxes


def _mosaic_downsample(s, anns, rng, extras):
    panes = [s] + [e[0] for e in extras]
    all_anns = [anns] + [e[1] for e in extras]
    pooled = []
    for pane in panes:
        r, c = pane.shape
        pooled.append(pane.reshape(r // 2, 2, c // 2, 2).mean(axis=(1, 3)))
    grid = _mosaic_grid(pooled)
    boxes: list[SignalAnnotation] = []
    for q, pane_anns in enumerate(all_anns):
        qr, qc = divmod(q, 2)
        boxes.extend(_remap_boxes(pane_anns, 0.5, qc * 0.5, 0.5, qr * 0.5))
    return grid, boxes


def apply_spec_augmentation(
    s: np.ndarray,
    annotations: list[SignalAnnotation],
    variant,
    rng: np.random.Generator,
    extras: tuple = (),
    iq: np.ndarray | None = None,
) -> tuple[np.ndarray, list[SignalAnnotation]]:
    """Apply one spectrogram-domain augmentation, returning the transformed
    matrix and remapped annotations.

    Mosaic variants require exactly three (spectrogram, annotations) pairs
    in `extras`; SpecRandomResizeCrop needs the originating IQ buffer.
    """
    is_mosaic = isinstance(variant, (MosaicCrop, MosaicDownsample))
    if is_mosaic and len(extras) != 3:
        raise ParameterError("mosaic variants need exactly 3 extra examples")
    if not is_mosaic and extras:
        raise ParameterError("extras are only accepted by mosaic variants")
    if isinstance(variant, SpecResize):
        return _resize(s, annotations, variant.height, variant.width, rng)
    if isinstance(variant, SpecDropSamples):
        return _spec_drop(s, annotations, variant, rng)
    if isinstance(variant, SpecPatchShuffle):
        return _spec_patch_shuffle(s, annotations, variant, rng)
    if isinstance(variant, SpecTranslation):
        return _spec_translate(s, annotations, variant, rng)
    if isinstance(variant, SpecRandomResizeCrop):
        return _spec_rrc(s, annotations, variant, rng, iq)
    if isinstance(variant, MosaicCrop):
        return _mosaic_crop(s, annotations, variant, rng, extras)
    if isinstance(variant, MosaicDownsample):
        return _mosaic_downsample(s, annotations, rng, extras)
    raise ParameterError(f"unknown spectrogram augmentation {variant!r}")
