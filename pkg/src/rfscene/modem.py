# Baseband synthesis for the 53 supported signal classes across the six
# modulation families (ASK, PAM, PSK, QAM, FSK, OFDM).
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np
from scipy import signal as sps_sig

from .dsp import ParameterError, _gaussian_taps, _rrc_taps, resample


class ModFamily(Enum):
    ASK = "ask"
    FSK = "fsk"
    OFDM = "ofdm"
    PAM = "pam"
    PSK = "psk"
    QAM = "qam"

    @property
    def index(self) -> int:
        """Stable class index for family-level recognition (alphabetical)."""
        return _FAMILY_ORDER.index(self)


_FAMILY_ORDER = [
    ModFamily.ASK,
    ModFamily.FSK,
    ModFamily.OFDM,
    ModFamily.PAM,
    ModFamily.PSK,
    ModFamily.QAM,
]


class SignalClass(IntEnum):
    """The 53 signal classes with their canonical dataset indices."""

    OOK = 0
    BPSK = 1
    PAM4 = 2
    ASK4 = 3
    QPSK = 4
    PAM8 = 5
    ASK8 = 6
    PSK8 = 7
    QAM16 = 8
    PAM16 = 9
    ASK16 = 10
    PSK16 = 11
    QAM32 = 12
    QAM32_CROSS = 13
    PAM32 = 14
    ASK32 = 15
    PSK32 = 16
    QAM64 = 17
    PAM64 = 18
    ASK64 = 19
    PSK64 = 20
    QAM128_CROSS = 21
    QAM256 = 22
    QAM512_CROSS = 23
    QAM1024 = 24
    FSK2 = 25
    GFSK2 = 26
    MSK2 = 27
    GMSK2 = 28
    FSK4 = 29
    GFSK4 = 30
    MSK4 = 31
    GMSK4 = 32
    FSK8 = 33
    GFSK8 = 34
    MSK8 = 35
    GMSK8 = 36
    FSK16 = 37
    GFSK16 = 38
    MSK16 = 39
    GMSK16 = 40
    OFDM_64 = 41
    OFDM_72 = 42
    OFDM_128 = 43
    OFDM_180 = 44
    OFDM_256 = 45
    OFDM_300 = 46
    OFDM_512 = 47
    OFDM_600 = 48
    OFDM_900 = 49
    OFDM_1024 = 50
    OFDM_1200 = 51
    OFDM_2048 = 52

    @property
    def family(self) -> ModFamily:
        return class_to_family(self)

    @property
    def label(self) -> str:
        return _CLASS_LABELS[self]

    @property
    def order(self) -> int:
        """Constellation size / FSK level count / subcarrier count."""
        return _CLASS_ORDERS[self]


def _build_tables() -> tuple[dict, dict, dict]:
    labels: dict[SignalClass, str] = {}
    families: dict[SignalClass, ModFamily] = {}
    orders: dict[SignalClass, int] = {}

    def put(cls: SignalClass, label: str, family: ModFamily, order: int) -> None:
        labels[cls], families[cls], orders[cls] = label, family, order

    put(SignalClass.OOK, "ook", ModFamily.PAM, 2)
    put(SignalClass.BPSK, "bpsk", ModFamily.PSK, 2)
    put(SignalClass.QPSK, "qpsk", ModFamily.PSK, 4)
    for m in (4, 8, 16, 32, 64):
        put(SignalClass[f"PAM{m}"], f"{m}pam", ModFamily.PAM, m)
        put(SignalClass[f"ASK{m}"], f"{m}ask", ModFamily.ASK, m)
        if m >= 8:
            put(SignalClass[f"PSK{m}"], f"{m}psk", ModFamily.PSK, m)
    for m in (16, 32, 64, 256, 1024):
        put(SignalClass[f"QAM{m}"], f"{m}qam", ModFamily.QAM, m)
    for m in (32, 128, 512):
        put(SignalClass[f"QAM{m}_CROSS"], f"{m}qam_cross", ModFamily.QAM, m)
    for m in (2, 4, 8, 16):
        put(SignalClass[f"FSK{m}"], f"{m}fsk", ModFamily.FSK, m)
        put(SignalClass[f"GFSK{m}"], f"{m}gfsk", ModFamily.FSK, m)
        put(SignalClass[f"MSK{m}"], f"{m}msk", ModFamily.FSK, m)
        put(SignalClass[f"GMSK{m}"], f"{m}gmsk", ModFamily.FSK, m)
    for n in (64, 72, 128, 180, 256, 300, 512, 600, 900, 1024, 1200, 2048):
        put(SignalClass[f"OFDM_{n}"], f"ofdm-{n}", ModFamily.OFDM, n)
    return labels, families, orders


_CLASS_LABELS, _CLASS_FAMILIES, _CLASS_ORDERS = _build_tables()

OFDM_SUBCARRIER_COUNTS = (64, 72, 128, 180, 256, 300, 512, 600, 900, 1024, 1200, 2048)

LINEAR_FAMILIES = (ModFamily.ASK, ModFamily.PAM, ModFamily.PSK, ModFamily.QAM)


def class_to_family(cls: SignalClass) -> ModFamily:
    return _CLASS_FAMILIES[SignalClass(cls)]


def class_from_label(label: str) -> SignalClass:
    for cls, lab in _CLASS_LABELS.items():
        if lab == label:
            return cls
    raise ParameterError(f"unknown class label {label!r}")


def classes_in_family(family: ModFamily) -> list[SignalClass]:
    return sorted(c for c, f in _CLASS_FAMILIES.items() if f is family)


# ---------------------------------------------------------------------------
# Constellations
# ---------------------------------------------------------------------------

def _normalize(points: np.ndarray) -> np.ndarray:
    return points / np.sqrt(np.mean(np.abs(points) ** 2))


def _square_grid(m_i: int, m_q: int) -> np.ndarray:
    i = 2 * np.arange(m_i) - (m_i - 1)
    q = 2 * np.arange(m_q) - (m_q - 1)
    return (i[:, None] + 1j * q[None, :]).ravel()


def _cross_grid(order: int) -> np.ndarray:
    # Cross constellations drop square corner blocks from an n x n grid:
    # 32 -> 6x6 minus 1x1 corners, 128 -> 12x12 minus 2x2, 512 -> 24x24
    # minus 4x4. In each case n = sqrt(9 * order / 8) and the corner block
    # side is n / 6.
    n = int(round(np.sqrt(9 * order / 8)))
    c = n // 6
    pts = _square_grid(n, n).reshape(n, n)
    keep = np.ones((n, n), dtype=bool)
    keep[:c, :c] = keep[:c, -c:] = keep[-c:, :c] = keep[-c:, -c:] = False
    return pts[keep]


def build_constellation(cls: SignalClass) -> np.ndarray:
    """Unit-mean-energy constellation for an ASK/PAM/PSK/QAM class."""
    cls = SignalClass(cls)
    family = class_to_family(cls)
    order = cls.order
    if family is ModFamily.PAM:
        points = np.arange(order, dtype=complex)  # unipolar; OOK is 2-PAM
    elif family is ModFamily.ASK:
        points = (2 * np.arange(order) - (order - 1)).astype(complex)
    elif family is ModFamily.PSK:
        points = np.exp(2j * np.pi * np.arange(order) / order)
    elif family is ModFamily.QAM:
        if cls.name.endswith("_CROSS"):
            points = _cross_grid(order)
        elif order == 32:
            points = _square_grid(8, 4)
        else:
            side = int(round(np.sqrt(order)))
            points = _square_grid(side, side)
    else:
        raise ParameterError(f"{cls.label} has no point constellation")
    return _normalize(points)


# ---------------------------------------------------------------------------
# Linear modulation (ASK / PAM / PSK / QAM)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearModSpec:
    constellation: np.ndarray
    samples_per_symbol: float
    rrc_rolloff: float = 0.25
    filter_span_symbols: int = 8

    def validate(self) -> None:
        pts = np.asarray(self.constellation)
        if pts.size < 2:
            raise ParameterError("constellation needs at least 2 points")
        if abs(np.mean(np.abs(pts) ** 2) - 1.0) > 1e-9:
            raise ParameterError("constellation must have unit mean energy")
        if self.samples_per_symbol < 2:
            raise ParameterError("samples_per_symbol must be >= 2")
        if not (0.0 <= self.rrc_rolloff <= 1.0):
            raise ParameterError("rolloff must be in [0, 1]")

    @property
    def occupied_bandwidth(self) -> float:
        return (1.0 + self.rrc_rolloff) / self.samples_per_symbol


def synthesize_linear(
    spec: LinearModSpec,
    num_symbols: int,
    rng: np.random.Generator,
    symbols: np.ndarray | None = None,
) -> np.ndarray:
    """RRC pulse-shaped symbol stream with mean power ~1.

    Symbols default to iid uniform draws over the constellation; pass an
    explicit sequence for loopback testing. The output keeps the full filter
    transient: at integer sps, symbol k peaks at k * sps + (num_taps - 1) / 2.
    """
    spec.validate()
    if num_symbols < 1:
        raise ParameterError("num_symbols must be >= 1")
    sps = spec.samples_per_symbol
    base = max(2, int(round(sps)))
    if symbols is None:
        symbols = rng.choice(np.asarray(spec.constellation, dtype=complex), size=num_symbols)
    train = np.zeros(num_symbols * base, dtype=complex)
    train[::base] = symbols
    taps = _rrc_taps(spec.filter_span_symbols * base + 1, base, spec.rrc_rolloff)
    shaped = sps_sig.oaconvolve(train, taps) * np.sqrt(base)
    if abs(sps - base) > 1e-12:
        shaped = resample(shaped, sps / base)
    return shaped


# ---------------------------------------------------------------------------
# FSK family (continuous-phase)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FskSpec:
    levels: int
    samples_per_symbol: float
    mod_index: float = 1.0
    gaussian_bt: float | None = None  # set for GFSK/GMSK variants

    def validate(self) -> None:
        if self.levels not in (2, 4, 8, 16):
            raise ParameterError("FSK level count must be one of 2/4/8/16")
        if self.mod_index <= 0:
            raise ParameterError("modulation index must be positive")
        if self.samples_per_symbol < 2:
            raise ParameterError("samples_per_symbol must be >= 2")
        if self.occupied_bandwidth > 1.0:
            raise ParameterError("samples_per_symbol too small for the deviation span")

    @property
    def occupied_bandwidth(self) -> float:
        # Outer-deviation span plus one symbol rate for the tone mainlobes
        # (Carson-style estimate); also what the scene planner inverts.
        return (self.mod_index * (self.levels - 1) + 1.0) / self.samples_per_symbol


def fsk_spec_for_class(cls: SignalClass, samples_per_symbol: float, rng: np.random.Generator) -> FskSpec:
    """Standard parameterization: FSK h=1, MSK/GMSK h=0.5, G-variants
    carry a Gaussian BT drawn uniform in [0.3, 0.5]."""
    name = cls.name
    h = 0.5 if "MSK" in name else 1.0
    bt = float(rng.uniform(0.3, 0.5)) if name.startswith("G") else None
    return FskSpec(levels=cls.order, samples_per_symbol=samples_per_symbol,
                   mod_index=h, gaussian_bt=bt)


def synthesize_fsk(spec: FskSpec, num_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Constant-envelope continuous-phase FSK/MSK (optionally Gaussian
    pre-filtered); length is floor(num_symbols * samples_per_symbol).

    samples_per_symbol may be fractional: each output sample takes the
    frequency of the symbol its time index falls into, so any occupied
    bandwidth is reachable without a resampling pass.
    """
    spec.validate()
    if num_symbols < 1:
        raise ParameterError("num_symbols must be >= 1")
    m, sps, h = spec.levels, spec.samples_per_symbol, spec.mod_index
    levels = 2 * rng.integers(0, m, size=num_symbols) - (m - 1)
    n = int(num_symbols * sps)
    sym_idx = np.minimum((np.arange(n) / sps).astype(np.intp), num_symbols - 1)
    inst_freq = (h / (2.0 * sps)) * levels[sym_idx]
    if spec.gaussian_bt is not None:
        half = max(1, int(round(2 * sps)))
        taps = _gaussian_taps(2 * half + 1, sps, spec.gaussian_bt)
        inst_freq = sps_sig.oaconvolve(inst_freq, taps / taps.sum(), mode="same")
    phase = 2 * np.pi * np.cumsum(inst_freq)
    return np.exp(1j * phase)


# ---------------------------------------------------------------------------
# OFDM family
# ---------------------------------------------------------------------------

SIDELOBE_METHODS = ("none", "window", "edge_null")


@dataclass(frozen=True)
class OfdmSpec:
    num_subcarriers: int
    cp_ratio: float = 0.125
    dc_subcarrier: bool = True
    sidelobe_suppression: str = "none"
    enable_pilots: bool = False
    enable_resource_blocks: bool = False
    enable_bursty_symbols: bool = False
    data_order: int = 4  # QAM order for subcarrier data
    fft_size_override: int | None = None  # hit an exact occupancy ratio

    def validate(self) -> None:
        if self.num_subcarriers not in OFDM_SUBCARRIER_COUNTS:
            raise ParameterError(f"unsupported subcarrier count {self.num_subcarriers}")
        if not (0.0 <= self.cp_ratio <= 0.25):
            raise ParameterError("cp_ratio must be in [0, 0.25]")
        if self.sidelobe_suppression not in SIDELOBE_METHODS:
            raise ParameterError(f"unknown sidelobe suppression {self.sidelobe_suppression!r}")
        if self.fft_size_override is not None and self.fft_size_override <= self.num_subcarriers:
            raise ParameterError("fft_size_override must exceed the occupied span")

    @property
    def fft_size(self) -> int:
        if self.fft_size_override is not None:
            return self.fft_size_override
        # Smallest power of two holding the occupied span with >= 25% guard.
        n = 1
        while n < self.num_subcarriers * 4 // 3:
            n *= 2
        return n

    @property
    def cp_length(self) -> int:
        return int(round(self.cp_ratio * self.fft_size))

    @property
    def symbol_length(self) -> int:
        return self.fft_size + self.cp_length

    @property
    def occupied_bandwidth(self) -> float:
        return self.num_subcarriers / self.fft_size

    def occupied_bins(self) -> np.ndarray:
        """Occupied subcarrier indices in unshifted FFT-bin terms."""
        half = self.num_subcarriers // 2
        bins = np.arange(-half, self.num_subcarriers - half)
        if not self.dc_subcarrier:
            bins = bins[bins != 0]
        return bins % self.fft_size


def _ofdm_grid(spec: OfdmSpec, num_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Subcarrier symbol grid, shape (num_symbols, fft_size), FFT bin order."""
    bins = spec.occupied_bins()
    data_points = build_constellation(_QAM_BY_ORDER[spec.data_order])
    grid = np.zeros((num_symbols, spec.fft_size), dtype=complex)
    grid[:, bins] = rng.choice(data_points, size=(num_symbols, bins.size))
    if spec.enable_pilots:
        n_pilots = int(rng.integers(1, max(2, spec.num_subcarriers // 10)))
        pilot_bins = rng.choice(bins, size=min(n_pilots, bins.size), replace=False)
        phases = np.exp(2j * np.pi * rng.random(pilot_bins.size))
        grid[:, pilot_bins] = np.sqrt(2.0) * phases  # boosted, constant in time
    if spec.enable_resource_blocks:
        for _ in range(int(rng.integers(1, 4))):
            width = int(rng.integers(1, max(2, bins.size // 4)))
            start = int(rng.integers(0, bins.size - width + 1))
            t0 = int(rng.integers(0, num_symbols))
            t1 = int(rng.integers(t0 + 1, num_symbols + 1))
            grid[t0:t1, bins[start : start + width]] = 0.0
    if spec.enable_bursty_symbols:
        off = rng.random(num_symbols) < 0.2
        if off.all():
            off[0] = False
        grid[off] = 0.0
    if spec.sidelobe_suppression == "edge_null":
        signed = (bins + spec.fft_size // 2) % spec.fft_size - spec.fft_size // 2
        order = np.argsort(signed)
        width = max(1, spec.num_subcarriers // 64)
        grid[:, bins[order[:width]]] = 0.0
        grid[:, bins[order[-width:]]] = 0.0
    return grid


def _ofdm_to_time(grid: np.ndarray, spec: OfdmSpec) -> np.ndarray:
    symbols = np.fft.ifft(grid, axis=1)
    cp = spec.cp_length
    extended = np.concatenate([symbols[:, spec.fft_size - cp :], symbols], axis=1) if cp else symbols
    if spec.sidelobe_suppression == "window":
        alpha = min(0.2, 2.0 * max(cp, 4) / extended.shape[1])
        extended = extended * sps_sig.windows.tukey(extended.shape[1], alpha)
    out = extended.ravel()
    power = np.mean(np.abs(out[out != 0]) ** 2) if np.any(out) else 1.0
    return out / np.sqrt(power)


def synthesize_ofdm(spec: OfdmSpec, num_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """Cyclic-prefixed OFDM burst; active samples are normalized to unit
    mean power. Length is num_symbols * (fft_size + cp_length)."""
    spec.validate()
    if num_symbols < 1:
        raise ParameterError("num_symbols must be >= 1")
    return _ofdm_to_time(_ofdm_grid(spec, num_symbols, rng), spec)


_QAM_BY_ORDER = {
    4: SignalClass.QPSK,
    16: SignalClass.QAM16,
    64: SignalClass.QAM64,
}


# ---------------------------------------------------------------------------
# Generic per-class entry point
# ---------------------------------------------------------------------------

def synthesize_class(
    cls: SignalClass,
    num_samples: int,
    rng: np.random.Generator,
    samples_per_symbol: float | None = None,
) -> np.ndarray:
    """Synthesize at least num_samples of the given class with stock
    parameters, trimmed to exactly num_samples."""
    cls = SignalClass(cls)
    family = class_to_family(cls)
    if family in LINEAR_FAMILIES:
        sps = samples_per_symbol or 4.0
        spec = LinearModSpec(build_constellation(cls), sps, rrc_rolloff=float(rng.uniform(0.1, 0.5)))
        n_sym = int(np.ceil(num_samples / sps)) + spec.filter_span_symbols
        out = synthesize_linear(spec, n_sym, rng)
    elif family is ModFamily.FSK:
        h = 0.5 if "MSK" in cls.name else 1.0
        min_sps = int(np.ceil(h * (cls.order - 1) + 1)) + 1
        sps = int(samples_per_symbol or max(8, min_sps))
        spec = fsk_spec_for_class(cls, sps, rng)
        out = synthesize_fsk(spec, int(np.ceil(num_samples / sps)) + 1, rng)
    else:
        spec = OfdmSpec(num_subcarriers=cls.order, cp_ratio=0.125)
        n_sym = int(np.ceil(num_samples / spec.symbol_length)) + 1
        out = synthesize_ofdm(spec, n_sym, rng)
    if out.size < num_samples:
        raise ParameterError("synthesis fell short of the requested length")
    return out[:num_samples]
