# Box and mask targets at the three label granularities, plus the
# mask -> box post-processing used to score segmentation outputs.
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from rfscene import LabelGranularity, SceneSpec, plan_scene, render_example
from rfscene.targets import mask_to_boxes, scored_boxes_from_mask, to_boxes, to_mask

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

spec = SceneSpec(num_iq_samples=65_536)
rng = np.random.default_rng(11)
example = render_example(plan_scene(spec, rng), spec, rng)

for g in LabelGranularity:
    boxes = to_boxes(example, g)
    classes = sorted({b.class_index for b in boxes})
    print(f"{g.value:<10s}: {len(boxes)} boxes, classes {classes}")

mask = to_mask(example, LabelGranularity.DETECTION1)
recovered = mask_to_boxes(mask)
print(f"mask covers {mask.sum()} pixels; {len(recovered)} components recovered")

# Fake a soft segmentation output: blur the target mask and rescore.
soft = mask.astype(float) * 0.9 + 0.02
scored = scored_boxes_from_mask(soft)
for b in scored:
    print(f"  recovered box at t_c={b.t_center:.3f} f_c={b.f_center:+.3f} "
          f"score={b.score:.3f}")

fig, axes = plt.subplots(1, 2, figsize=(13, 6))
axes[0].imshow(mask, origin="lower", extent=(0, 1, -0.5, 0.5), aspect="auto")
axes[0].set_title("detection mask")
fam = to_mask(example, LabelGranularity.FAMILY6)
axes[1].imshow(fam.argmax(axis=0) + fam.any(axis=0), origin="lower",
               extent=(0, 1, -0.5, 0.5), aspect="auto", cmap="tab10")
axes[1].set_title("family channels (argmax view)")
fig.tight_layout()
fig.savefig(OUT / "targets.png", dpi=110)
print("targets.png written")
