# COCO-convention detection metrics over time-frequency boxes: greedy
# score-ordered matching per example and class, 101-point interpolated AP
# averaged over 10 IoU thresholds, size-bucketed APs, mAR, and SNR-binned
# recall.
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .dsp import ParameterError
from .targets import BoxTarget


@dataclass
class PredBox(BoxTarget):
    """A scored detection tied to one example."""

    example_index: int = 0


@dataclass(frozen=True)
class EvalConfig:
    iou_thresholds: tuple[float, ...] = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
    max_detections: int = 100
    recall_points: int = 101
    # area buckets in spectrogram pixels (512 x 512 grid)
    area_small: float = 32.0**2
    area_large_min: float = 96.0**2

    def validate(self) -> None:
        taus = self.iou_thresholds
        if not taus or any(not (0.0 < t <= 1.0) for t in taus):
            raise ParameterError("IoU thresholds must lie in (0, 1]")
        if list(taus) != sorted(taus):
            raise ParameterError("IoU thresholds must ascend")


@dataclass
class SnrBin:
    lo_db: float
    hi_db: float
    mar: float | None
    truth_count: int


@dataclass
class EvalReport:
    map: float | None
    ap50: float | None
    ap75: float | None
    ap_small: float | None
    ap_medium: float | None
    ap_large: float | None
    mar: float | None
    per_class: dict[int, float | None] = field(default_factory=dict)
    ap_per_threshold: tuple[float, ...] = ()
    snr_bins: list[SnrBin] | None = None


def iou(a: BoxTarget, b: BoxTarget) -> float:
    """Intersection over union of two center-form boxes."""
    t_inter = min(a.t_hi, b.t_hi) - max(a.t_lo, b.t_lo)
    f_inter = min(a.f_hi, b.f_hi) - max(a.f_lo, b.f_lo)
    if t_inter <= 0.0 or f_inter <= 0.0:
        return 0.0
    inter = t_inter * f_inter
    # areas from the same corner arithmetic keep identical boxes at exactly 1
    area_a = (a.t_hi - a.t_lo) * (a.f_hi - a.f_lo)
    area_b = (b.t_hi - b.t_lo) * (b.f_hi - b.f_lo)
    union = area_a + area_b - inter
    return float(inter / union) if union > 0 else 0.0


def _score_order(boxes: list) -> list[int]:
    return sorted(range(len(boxes)), key=lambda i: -boxes[i].score)


def _match_example(
    dts: list[PredBox],
    gts: list[BoxTarget],
    taus: tuple[float, ...],
    gt_ignore: np.ndarray,
):
    """COCO greedy matching for one (example, class) pair.

    Detections are visited in descending score; each takes the unmatched
    ground truth with the highest IoU above the threshold. Ignored truths
    (outside the area range) are only taken when no eligible real truth
    remains, and the detections matched to them are excluded from scoring.
    """
    n_d, n_g = len(dts), len(gts)
    ious = np.zeros((n_d, n_g))
    for i, d in enumerate(dts):
        for j, g in enumerate(gts):
            ious[i, j] = iou(d, g)
    g_order = sorted(range(n_g), key=lambda j: bool(gt_ignore[j]))  # real first
    tp = np.zeros((len(taus), n_d), dtype=bool)
    dt_ignore = np.zeros((len(taus), n_d), dtype=bool)
    gt_matched = np.zeros((len(taus), n_g), dtype=bool)
    for ti, tau in enumerate(taus):
        taken = np.zeros(n_g, dtype=bool)
        for i in range(n_d):
            best = min(tau, 1.0 - 1e-10)
            m = -1
            for j in g_order:
                if taken[j]:
                    continue
                if m > -1 and not gt_ignore[m] and gt_ignore[j]:
                    break  # an eligible real match already found
                if ious[i, j] < best:
                    continue
                best = ious[i, j]
                m = j
            if m == -1:
                continue
            taken[m] = True
            gt_matched[ti, m] = True
            if gt_ignore[m]:
                dt_ignore[ti, i] = True
            else:
                tp[ti, i] = True
    return tp, dt_ignore, gt_matched


def _area_ignore(gts: list[BoxTarget], area_range: tuple[float, float]) -> np.ndarray:
    lo, hi = area_range
    return np.array([not (lo <= g.pixel_area < hi) for g in gts], dtype=bool)


def _interp_ap(scores, tp, ignore, n_gt, recall_points) -> tuple[float, float]:
    """(AP, final recall) from globally sorted detection outcomes."""
    if n_gt == 0:
        return float("nan"), float("nan")
    keep = ~ignore
    tp = tp[keep]
    if tp.size == 0:
        return 0.0, 0.0
    tps = np.cumsum(tp)
    fps = np.cumsum(~tp)
    recall = tps / n_gt
    precision = tps / np.maximum(tps + fps, 1e-12)
    for i in range(precision.size - 2, -1, -1):
        precision[i] = max(precision[i], precision[i + 1])
    points = np.linspace(0.0, 1.0, recall_points)
    idx = np.searchsorted(recall, points, side="left")
    sampled = np.where(idx < precision.size, precision[np.minimum(idx, precision.size - 1)], 0.0)
    return float(sampled.mean()), float(recall[-1])


class _ClassEval:
    """Matching outcomes for one class over all examples."""

    def __init__(self, scores, tp, dt_ignore, n_gt, gt_matched, gt_snrs):
        order = np.argsort(-scores, kind="stable") if scores.size else np.array([], dtype=int)
        self.scores = scores[order]
        self.tp = tp[:, order]
        self.dt_ignore = dt_ignore[:, order]
        self.n_gt = n_gt
        self.gt_matched = gt_matched  # (T, n_gt_total) incl. ignored
        self.gt_snrs = gt_snrs


def _collect_class(
    cls: int,
    preds_by_ex: dict[int, list[PredBox]],
    truths: dict[int, list[BoxTarget]],
    cfg: EvalConfig,
    area_range: tuple[float, float],
) -> _ClassEval:
    taus = cfg.iou_thresholds
    all_scores, all_tp, all_ign = [], [], []
    all_matched, all_snrs = [], []
    n_gt = 0
    examples = set(truths) | set(preds_by_ex)
    for ex in sorted(examples):
        gts = [g for g in truths.get(ex, []) if g.class_index == cls]
        dts = [d for d in preds_by_ex.get(ex, []) if d.class_index == cls]
        order = _score_order(dts)[: cfg.max_detections]
        dts = [dts[i] for i in order]
        gt_ignore = _area_ignore(gts, area_range)
        tp, dt_ign, gt_matched = _match_example(dts, gts, taus, gt_ignore)
        # unmatched detections outside the area range are not penalized
        if dts:
            d_out = np.array(
                [not (area_range[0] <= d.pixel_area < area_range[1]) for d in dts]
            )
            unmatched = ~tp & ~dt_ign
            dt_ign = dt_ign | (unmatched & d_out[None, :])
        all_scores.append(np.array([d.score for d in dts], dtype=float))
        all_tp.append(tp)
        all_ign.append(dt_ign)
        all_matched.append(gt_matched)
        all_snrs.append(np.array([np.nan if g.snr_db is None else g.snr_db for g in gts]))
        n_gt += int((~gt_ignore).sum())
    T = len(taus)
    scores = np.concatenate(all_scores) if all_scores else np.zeros(0)
    tp = np.concatenate(all_tp, axis=1) if all_tp else np.zeros((T, 0), dtype=bool)
    ign = np.concatenate(all_ign, axis=1) if all_ign else np.zeros((T, 0), dtype=bool)
    matched = np.concatenate(all_matched, axis=1) if all_matched else np.zeros((T, 0), dtype=bool)
    snrs = np.concatenate(all_snrs) if all_snrs else np.zeros(0)
    return _ClassEval(scores, tp, ign, n_gt, matched, snrs)


def _truth_classes(truths: dict[int, list[BoxTarget]]) -> list[int]:
    present = {g.class_index for gts in truths.values() for g in gts}
    return sorted(present)


def _mean_or_none(values: list[float]) -> float | None:
    vals = [v for v in values if not np.isnan(v)]
    return float(np.mean(vals)) if vals else None


def evaluate(
    preds: list[PredBox],
    truths: dict[int, list[BoxTarget]],
    cfg: EvalConfig = EvalConfig(),
) -> EvalReport:
    """COCO-convention evaluation.

    `truths` maps example index to its ground-truth boxes; predictions
    carry their own example index. Classes absent from the ground truth are
    excluded from every average rather than counted as zero.
    """
    cfg.validate()
    for p in preds:
        if p.score is None:
            raise ParameterError("every prediction needs a score")
    classes = _truth_classes(truths)
    pred_classes = {p.class_index for p in preds}
    if pred_classes - set(classes) and not classes:
        # no truth at all: report undefined
        return EvalReport(None, None, None, None, None, None, None)
    preds_by_ex: dict[int, list[PredBox]] = defaultdict(list)
    for p in preds:
        preds_by_ex[p.example_index].append(p)

    taus = cfg.iou_thresholds
    full_range = (0.0, float("inf"))
    per_class_ap: dict[int, float | None] = {}
    ap_matrix = []  # rows: classes, cols: thresholds
    recall_rows = []
    for cls in classes:
        ce = _collect_class(cls, preds_by_ex, truths, cfg, full_range)
        aps, recalls = [], []
        for ti in range(len(taus)):
            ap, rc = _interp_ap(ce.scores, ce.tp[ti], ce.dt_ignore[ti], ce.n_gt, cfg.recall_points)
            aps.append(ap)
            recalls.append(rc)
        ap_matrix.append(aps)
        recall_rows.append(recalls)
        per_class_ap[cls] = _mean_or_none(aps)

    def bucket_ap(area_range) -> float | None:
        vals = []
        for cls in classes:
            ce = _collect_class(cls, preds_by_ex, truths, cfg, area_range)
            if ce.n_gt == 0:
                continue
            aps = [
                _interp_ap(ce.scores, ce.tp[ti], ce.dt_ignore[ti], ce.n_gt, cfg.recall_points)[0]
                for ti in range(len(taus))
            ]
            vals.append(float(np.mean(aps)))
        return _mean_or_none(vals) if vals else None

    ap_arr = np.array(ap_matrix) if ap_matrix else np.zeros((0, len(taus)))
    rec_arr = np.array(recall_rows) if recall_rows else np.zeros((0, len(taus)))
    defined = ~np.isnan(ap_arr).all(axis=1) if ap_arr.size else np.zeros(0, dtype=bool)

    def tau_ap(tau: float) -> float | None:
        if tau not in taus or not ap_arr.size:
            return None
        return _mean_or_none(list(ap_arr[defined, taus.index(tau)]))

    report = EvalReport(
        map=_mean_or_none([float(np.mean(row)) for row in ap_arr[defined]]) if ap_arr.size else None,
        ap50=tau_ap(0.5),
        ap75=tau_ap(0.75),
        ap_small=bucket_ap((0.0, cfg.area_small)),
        ap_medium=bucket_ap((cfg.area_small, cfg.area_large_min)),
        ap_large=bucket_ap((cfg.area_large_min, float("inf"))),
        mar=_mean_or_none([float(np.mean(row)) for row in rec_arr[defined]]) if rec_arr.size else None,
        per_class=per_class_ap,
        ap_per_threshold=tuple(
            float(np.nanmean(ap_arr[:, ti])) if ap_arr.size else float("nan")
            for ti in range(len(taus))
        ),
    )
    return report


def mar_vs_snr(
    preds: list[PredBox],
    truths: dict[int, list[BoxTarget]],
    cfg: EvalConfig = EvalConfig(),
    bin_width_db: float = 2.0,
) -> list[SnrBin]:
    """Recall (averaged over IoU thresholds, pooled over classes) for truth
    boxes grouped into SNR bins; every truth must carry `snr_db`."""
    cfg.validate()
    preds_by_ex: dict[int, list[PredBox]] = defaultdict(list)
    for p in preds:
        preds_by_ex[p.example_index].append(p)
    snrs, hit_fracs = [], []
    for cls in _truth_classes(truths):
        ce = _collect_class(cls, preds_by_ex, truths, cfg, (0.0, float("inf")))
        if ce.gt_snrs.size == 0:
            continue
        if np.isnan(ce.gt_snrs).any():
            raise ParameterError("every truth box needs snr_db for the SNR sweep")
        snrs.append(ce.gt_snrs)
        hit_fracs.append(ce.gt_matched.mean(axis=0))
    if not snrs:
        return []
    snrs = np.concatenate(snrs)
    hit_fracs = np.concatenate(hit_fracs)
    lo = np.floor(snrs.min() / bin_width_db) * bin_width_db
    hi = snrs.max()
    bins: list[SnrBin] = []
    edge = lo
    while edge <= hi:
        in_bin = (snrs >= edge) & (snrs < edge + bin_width_db)
        count = int(in_bin.sum())
        mar = float(hit_fracs[in_bin].mean()) if count else None
        bins.append(SnrBin(float(edge), float(edge + bin_width_db), mar, count))
        edge += bin_width_db
    return bins
