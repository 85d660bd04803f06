# Synthesize a handful of the 53 signal classes and look at their spectra
# and constellations.
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rfscene import SignalClass, build_constellation, synthesize_class

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

rng = np.random.default_rng(0)

# A few constellations from the linear families.
fig, axes = plt.subplots(1, 4, figsize=(14, 3.5))
for ax, cls in zip(axes, (SignalClass.QPSK, SignalClass.QAM16,
                          SignalClass.QAM32_CROSS, SignalClass.QAM256)):
    pts = build_constellation(cls)
    ax.scatter(pts.real, pts.imag, s=8)
    ax.set_title(cls.label)
    ax.set_aspect("equal")
fig.tight_layout()
fig.savefig(OUT / "constellations.png", dpi=110)
print("constellations.png: note the cross shape dropping the grid corners")

# Power spectra across the six families.
picks = [SignalClass.QAM64, SignalClass.PAM4, SignalClass.ASK8,
         SignalClass.PSK8, SignalClass.GFSK2, SignalClass.OFDM_256]
fig, axes = plt.subplots(2, 3, figsize=(14, 7))
for ax, cls in zip(axes.ravel(), picks):
    x = synthesize_class(cls, 65_536, rng)
    psd = np.abs(np.fft.fftshift(np.fft.fft(x))) ** 2
    freqs = np.fft.fftshift(np.fft.fftfreq(x.size))
    ax.plot(freqs, 10 * np.log10(psd / psd.max() + 1e-9), lw=0.4)
    ax.set_title(f"{cls.label} ({cls.family.value} family)")
    ax.set_ylim(-70, 3)
fig.tight_layout()
fig.savefig(OUT / "class_spectra.png", dpi=110)
print("class_spectra.png: one spectrum per modulation family")
