# Training-time augmentations: IQ-domain variants, MixUp/CutMix, and
# spectrogram-domain transforms including the 2x2 mosaics.
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Rectangle

from rfscene import SceneSpec, plan_scene, render_example, spectrogram
from rfscene.augment import (
    CutOut,
    MixUp,
    MosaicDownsample,
    SpecTranslation,
    TimeReversal,
    apply_iq_augmentation,
    apply_spec_augmentation,
    mix_augmentation,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = SceneSpec(num_iq_samples=65_536)
rng = np.random.default_rng(3)


def scene(seed):
    r = np.random.default_rng(seed)
    return render_example(plan_scene(spec, r), spec, r)


def draw(ax, s, anns, title):
    ax.imshow(10 * np.log10(np.abs(s) ** 2 + 1e-12), origin="lower", aspect="auto",
              extent=(0, 1, -0.5, 0.5), cmap="viridis")
    for a in anns:
        ax.add_patch(Rectangle((a.t_start, a.f_lo), a.duration, a.bandwidth,
                               fill=False, edgecolor="red", linewidth=0.8))
    ax.set_title(title)


base = scene(0)
reversed_ex = apply_iq_augmentation(base, TimeReversal(), rng)
cut = apply_iq_augmentation(base, CutOut(duration=0.15, fill="low_noise", start=0.4), rng)
mixed = mix_augmentation(base, scene(1), MixUp(weight=0.6), rng)
print(f"time reversal mirrors boxes; cutout split {len(base.annotations)} boxes "
      f"into {len(cut.annotations)}; mixup union has {len(mixed.annotations)}")

panes = [scene(i) for i in range(2, 6)]
spectros = [(spectrogram(p.iq), p.annotations) for p in panes]
mosaic, mosaic_anns = apply_spec_augmentation(
    spectros[0][0], spectros[0][1], MosaicDownsample(), rng,
    extras=tuple(spectros[1:]))
translated, trans_anns = apply_spec_augmentation(
    spectrogram(base.iq), base.annotations, SpecTranslation(dt=20, df=64), rng)

fig, axes = plt.subplots(2, 3, figsize=(18, 11))
draw(axes[0, 0], spectrogram(base.iq), base.annotations, "original")
draw(axes[0, 1], spectrogram(reversed_ex.iq), reversed_ex.annotations, "time reversal")
draw(axes[0, 2], spectrogram(cut.iq), cut.annotations, "cutout (low-SNR fill)")
draw(axes[1, 0], spectrogram(mixed.iq), mixed.annotations, "mixup")
draw(axes[1, 1], translated, trans_anns, "spectrogram translation")
draw(axes[1, 2], mosaic, mosaic_anns, f"mosaic downsample ({len(mosaic_anns)} boxes)")
fig.tight_layout()
fig.savefig(OUT / "augmentations.png", dpi=100)
print("augmentations.png written")
