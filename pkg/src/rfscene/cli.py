# Command-line front door: dataset generation, record inspection, and
# detection evaluation against a truth store.
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dsp import spectrogram
from .metrics import EvalConfig, PredBox, evaluate, mar_vs_snr
from .store import DatasetVariant, RecordStore, generate_dataset, record_digest
from .targets import LabelGranularity, to_boxes

GRANULARITIES = {g.value: g for g in LabelGranularity}


def _cmd_generate(args) -> int:
    variant = DatasetVariant.from_tag(args.variant)
    store = generate_dataset(variant, args.seed, args.out,
                             count=args.count, workers=args.workers)
    print(f"wrote {store.count} records to {store.path}")
    return 0


def _format_annotation(a) -> str:
    return (f"{a.class_index:>2d} {a.family.value:<5s} t=[{a.t_start:.4f},{a.t_stop:.4f}] "
            f"f=[{a.f_lo:+.4f},{a.f_hi:+.4f}] snr={a.snr_db:+.1f} dB")


def _cmd_inspect(args) -> int:
    store = RecordStore(args.store)
    payload = store.read_payload(args.index)
    example = store.read_record(args.index)
    if args.json:
        doc = {
            "index": args.index,
            "count": store.count,
            "variant": store.variant_tag,
            "num_samples": example.num_samples,
            "digest": record_digest(payload),
            "meta": example.meta,
            "first_samples": [[float(v.real), float(v.imag)] for v in example.iq[:8]],
            "annotations": [
                {
                    "class_index": a.class_index,
                    "family": a.family.value,
                    "t_start": a.t_start,
                    "duration": a.duration,
                    "f_center": a.f_center,
                    "bandwidth": a.bandwidth,
                    "snr_db": a.snr_db,
                }
                for a in example.annotations
            ],
        }
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"record {args.index} of {store.count} ({store.variant_tag})")
        print(f"samples: {example.num_samples}, noise psd: {example.noise_psd:.3f}")
        for a in example.annotations:
            print("  " + _format_annotation(a))
    if args.spectrogram:
        _render_spectrogram(example, args.spectrogram)
        print(f"spectrogram written to {args.spectrogram}")
    return 0


def _render_spectrogram(example, out_path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    s = spectrogram(example.iq.astype(np.complex128))
    power_db = 10 * np.log10(np.abs(s) ** 2 + 1e-12)
    fig, ax = plt.subplots(figsize=(8, 8))
    ax.imshow(power_db, origin="lower", aspect="auto",
              extent=(0.0, 1.0, -0.5, 0.5), cmap="viridis")
    for a in example.annotations:
        ax.add_patch(Rectangle((a.t_start, a.f_lo), a.duration, a.bandwidth,
                               fill=False, edgecolor="red", linewidth=1.2))
        ax.text(a.t_start, a.f_hi, str(a.class_index), color="red", fontsize=8,
                va="bottom")
    ax.set_xlabel("time (fraction of example)")
    ax.set_ylabel("frequency (cycles/sample)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def load_predictions(path: str) -> list[PredBox]:
    """Line format: example_index t_c f_c d B class score"""
    preds = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 7:
                raise ValueError(f"{path}:{line_no}: expected 7 fields, got {len(parts)}")
            ex, t_c, f_c, d, b, cls, score = parts
            preds.append(PredBox(
                t_center=float(t_c), f_center=float(f_c), duration=float(d),
                bandwidth=float(b), class_index=int(cls), score=float(score),
                example_index=int(ex),
            ))
    return preds


def _fmt(v) -> str:
    return "undefined" if v is None else f"{v:.4f}"


def _cmd_eval(args) -> int:
    granularity = GRANULARITIES[args.granularity]
    store = RecordStore(args.truth)
    truths = {i: to_boxes(store.read_record(i), granularity) for i in range(store.count)}
    preds = load_predictions(args.preds)
    cfg = EvalConfig()
    report = evaluate(preds, truths, cfg)
    print(f"examples: {store.count}   predictions: {len(preds)}   granularity: {args.granularity}")
    for name, value in [("mAP", report.map), ("AP50", report.ap50), ("AP75", report.ap75),
                        ("APS", report.ap_small), ("APM", report.ap_medium),
                        ("APL", report.ap_large), ("mAR", report.mar)]:
        print(f"{name:<5s} {_fmt(value)}")
    if granularity is not LabelGranularity.DETECTION1 and report.per_class:
        print("per-class AP:")
        for cls, ap in sorted(report.per_class.items()):
            print(f"  class {cls:>2d}: {_fmt(ap)}")
    if args.snr_bins:
        snrs = [b.snr_db for boxes in truths.values() for b in boxes if b.snr_db is not None]
        if snrs:
            span = max(max(snrs) - min(snrs), 1e-6)
            width = span / args.snr_bins
            print(f"mAR vs SNR ({width:.2f} dB bins):")
            for b in mar_vs_snr(preds, truths, cfg, bin_width_db=width):
                print(f"  [{b.lo_db:+6.2f}, {b.hi_db:+6.2f}) dB: "
                      f"{_fmt(b.mar)} ({b.truth_count} boxes)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rfscene",
                                     description="Wideband RF scene dataset tool")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset split")
    gen.add_argument("--variant", required=True, choices=[v.tag for v in DatasetVariant])
    gen.add_argument("--seed", required=True, type=int)
    gen.add_argument("--count", type=int, default=None,
                     help="record count (default: the canonical split size)")
    gen.add_argument("--out", required=True)
    gen.add_argument("--workers", type=int, default=1)
    gen.set_defaults(fn=_cmd_generate)

    ins = sub.add_parser("inspect", help="inspect one stored record")
    ins.add_argument("--store", required=True)
    ins.add_argument("--index", required=True, type=int)
    ins.add_argument("--spectrogram", default=None,
                     help="write a spectrogram image with box overlays")
    ins.add_argument("--json", action="store_true", help="machine-readable output")
    ins.set_defaults(fn=_cmd_inspect)

    ev = sub.add_parser("eval", help="score predictions against a truth store")
    ev.add_argument("--preds", required=True,
                    help="file of lines: example_index t_c f_c d B class score")
    ev.add_argument("--truth", required=True, help="truth store directory")
    ev.add_argument("--granularity", default="detection", choices=sorted(GRANULARITIES))
    ev.add_argument("--snr-bins", type=int, default=0)
    ev.set_defaults(fn=_cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
