# Independent measurement oracles shared across the test suite. These stay
# deliberately naive: direct FFTs, histograms, and loops rather than the
# library's own code paths wherever a value is being cross-checked.
from __future__ import annotations

import numpy as np
from scipy import signal as sps_sig

from rfscene.modem import LinearModSpec, synthesize_linear
from rfscene.dsp import _rrc_taps


def fft_peak_freq(x: np.ndarray) -> float:
    """Frequency (cycles/sample) of the strongest FFT bin."""
    spec = np.fft.fft(np.asarray(x))
    return float(np.fft.fftfreq(len(x))[np.argmax(np.abs(spec))])


def band_power(x: np.ndarray, f_lo: float, f_hi: float) -> float:
    """Mean power inside [f_lo, f_hi) computed by direct FFT summation."""
    x = np.asarray(x)
    spec = np.fft.fft(x)
    freqs = np.fft.fftfreq(x.size)
    mask = (freqs >= f_lo) & (freqs < f_hi)
    return float(np.sum(np.abs(spec[mask]) ** 2) / x.size**2)


def energy_bandwidth(x: np.ndarray, fraction: float = 0.99) -> float:
    """Width of the symmetric band around DC holding `fraction` of energy."""
    spec = np.abs(np.fft.fft(np.asarray(x))) ** 2
    freqs = np.fft.fftfreq(x.size)
    order = np.argsort(np.abs(freqs), kind="stable")
    cum = np.cumsum(spec[order])
    idx = int(np.searchsorted(cum, fraction * cum[-1]))
    return float(2 * np.abs(freqs[order[min(idx, x.size - 1)]]))


def linear_loopback_ser(
    constellation: np.ndarray,
    num_symbols: int,
    rng: np.random.Generator,
    es_n0_db: float | None = 30.0,
    sps: int = 4,
    rolloff: float = 0.25,
) -> float:
    """Matched-filter loopback demodulation with known symbols and timing."""
    spec = LinearModSpec(constellation, float(sps), rolloff)
    sent_idx = rng.integers(0, len(constellation), size=num_symbols)
    sent = np.asarray(constellation)[sent_idx]
    tx = synthesize_linear(spec, num_symbols, rng, symbols=sent)
    if es_n0_db is not None:
        # Es = mean power * sps = sps for unit-power signals; noise PSD over
        # the full band equals the per-sample variance.
        n0 = sps / 10.0 ** (es_n0_db / 10.0)
        noise = np.sqrt(n0 / 2) * (
            rng.standard_normal(tx.size) + 1j * rng.standard_normal(tx.size)
        )
        tx = tx + noise
    taps = _rrc_taps(spec.filter_span_symbols * sps + 1, sps, rolloff)
    mf = sps_sig.fftconvolve(tx, taps)
    delay = taps.size - 1
    samples = mf[delay + np.arange(num_symbols) * sps] / np.sqrt(sps)
    decisions = np.argmin(
        np.abs(samples[:, None] - np.asarray(constellation)[None, :]), axis=1
    )
    return float(np.mean(decisions != sent_idx))


def discriminator(x: np.ndarray) -> np.ndarray:
    """Per-sample instantaneous frequency via phase differencing."""
    x = np.asarray(x)
    return np.angle(x[1:] * np.conj(x[:-1])) / (2 * np.pi)


def mid_symbol_freqs(x: np.ndarray, sps: int) -> np.ndarray:
    """Discriminator sampled at symbol midpoints (steady-state values)."""
    d = discriminator(x)
    idx = np.arange(sps // 2, d.size, sps)
    return d[idx]


def spectrogram_energy_map(x: np.ndarray, n_fft: int = 512) -> np.ndarray:
    """|STFT|^2 map built directly (boxcar window), rows ascending frequency."""
    x = np.asarray(x)
    nseg = x.size // n_fft
    frames = x[: nseg * n_fft].reshape(nseg, n_fft)
    spec = np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1)
    return (np.abs(spec) ** 2).T


def localize_energy(
    x: np.ndarray,
    t_center: float,
    f_center: float,
    t_halfwidth: float,
    f_halfwidth: float,
    n_fft: int = 256,
    threshold: float = 0.15,
) -> tuple[float, float]:
    """Center of the above-threshold energy extent (time, frequency) inside
    a search window around a claimed box center.

    The extent of the support, rather than a centroid, is used so that
    legitimate amplitude effects (gain steps, fading tilts) do not skew the
    estimate; the threshold is relative to the in-window peak, making the
    detector self-normalizing.
    """
    emap = spectrogram_energy_map(x, n_fft)
    n_rows, n_cols = emap.shape
    emap = np.maximum(emap - np.median(emap), 0.0)
    r0 = max(0, int((f_center - f_halfwidth + 0.5) * n_rows))
    r1 = min(n_rows, int(np.ceil((f_center + f_halfwidth + 0.5) * n_rows)) + 1)
    c0 = max(0, int((t_center - t_halfwidth) * n_cols))
    c1 = min(n_cols, int(np.ceil((t_center + t_halfwidth) * n_cols)) + 1)
    window = emap[r0:r1, c0:c1]
    if window.size == 0 or window.max() <= 0:
        return float("nan"), float("nan")

    def extent_center(profile: np.ndarray) -> float:
        above = np.flatnonzero(profile >= threshold * profile.max())
        return (above[0] + above[-1] + 1) / 2.0

    t_hat = (c0 + extent_center(window.sum(axis=0))) / n_cols
    f_hat = (r0 + extent_center(window.sum(axis=1))) / n_rows - 0.5
    return float(t_hat), float(f_hat)
