# End to end: generate a small impaired split, write it to disk, build
# jittered predictions from the truth, and score them with the COCO-style
# evaluator (including the recall-vs-SNR sweep).
import pathlib
import tempfile

import numpy as np

from rfscene import DatasetVariant, LabelGranularity, generate_dataset
from rfscene.metrics import PredBox, evaluate, mar_vs_snr
from rfscene.targets import to_boxes

workdir = pathlib.Path(tempfile.mkdtemp(prefix="rfscene-demo-"))
store = generate_dataset(DatasetVariant.IMPAIRED_VAL, 123, workdir / "val", count=12)
print(f"wrote {store.count} impaired records to {store.path}")

rng = np.random.default_rng(0)
truths = {}
preds = []
for i in range(store.count):
    example = store.read_record(i)
    boxes = to_boxes(example, LabelGranularity.FAMILY6)
    truths[i] = boxes
    for b in boxes:
        if rng.random() < 0.15:
            continue  # a missed detection
        jt, jf = rng.normal(0, 0.01, 2)
        preds.append(PredBox(
            t_center=float(np.clip(b.t_center + jt, b.duration / 2, 1 - b.duration / 2)),
            f_center=float(b.f_center + jf),
            duration=b.duration * float(rng.uniform(0.9, 1.1)),
            bandwidth=b.bandwidth * float(rng.uniform(0.9, 1.1)),
            class_index=b.class_index,
            score=float(rng.uniform(0.5, 1.0)),
            example_index=i,
        ))

report = evaluate(preds, truths)
print(f"\n{sum(len(t) for t in truths.values())} truth boxes, {len(preds)} predictions")
for name, value in [("mAP", report.map), ("AP50", report.ap50), ("AP75", report.ap75),
                    ("APS", report.ap_small), ("APM", report.ap_medium),
                    ("APL", report.ap_large), ("mAR", report.mar)]:
    shown = "undefined" if value is None else f"{value:.4f}"
    print(f"  {name:<5s} {shown}")

print("\nrecall vs SNR (4 dB bins):")
for b in mar_vs_snr(preds, truths, bin_width_db=4.0):
    shown = "  --  " if b.mar is None else f"{b.mar:.3f}"
    print(f"  [{b.lo_db:+6.1f}, {b.hi_db:+6.1f}) dB: {shown}  ({b.truth_count} boxes)")
