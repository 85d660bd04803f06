# Model-ready targets: center-form boxes at three label granularities,
# semantic masks on the spectrogram pixel grid, and the mask-to-box
# post-processing used to score segmentation outputs.
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .dsp import ParameterError
from .scenes import WidebandExample

MASK_SIZE = 512

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])


class LabelGranularity(Enum):
    FINE53 = "fine"
    FAMILY6 = "family"
    DETECTION1 = "detection"

    @property
    def num_classes(self) -> int:
        return {"fine": 53, "family": 6, "detection": 1}[self.value]


@dataclass
class BoxTarget:
    """Center-form time-frequency box: (t_c, f_c, d, B) plus class."""

    t_center: float
    f_center: float
    duration: float
    bandwidth: float
    class_index: int = 0
    score: float | None = None
    snr_db: float | None = None

    @property
    def t_lo(self) -> float:
        return self.t_center - self.duration / 2

    @property
    def t_hi(self) -> float:
        return self.t_center + self.duration / 2

    @property
    def f_lo(self) -> float:
        return self.f_center - self.bandwidth / 2

    @property
    def f_hi(self) -> float:
        return self.f_center + self.bandwidth / 2

    @property
    def pixel_area(self) -> float:
        return self.duration * MASK_SIZE * self.bandwidth * MASK_SIZE

    def validate(self) -> None:
        if self.duration <= 0 or self.bandwidth <= 0:
            raise ParameterError("box extents must be positive")
        if self.t_lo < -1e-9 or self.t_hi > 1.0 + 1e-9:
            raise ParameterError("box leaves the [0, 1] time extent")
        if self.f_lo < -0.5 - 1e-9 or self.f_hi > 0.5 + 1e-9:
            raise ParameterError("box leaves the frequency band")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ParameterError("score must be in [0, 1]")


def _class_for(annotation, granularity: LabelGranularity) -> int:
    if granularity is LabelGranularity.DETECTION1:
        return 0
    if granularity is LabelGranularity.FAMILY6:
        return annotation.family.index
    return annotation.class_index


def to_boxes(example: WidebandExample, granularity: LabelGranularity) -> list[BoxTarget]:
    """One center-form box per annotation; only the class index depends on
    the granularity."""
    return [
        BoxTarget(
            t_center=a.t_start + a.duration / 2,
            f_center=a.f_center,
            duration=a.duration,
            bandwidth=a.bandwidth,
            class_index=_class_for(a, granularity),
            snr_db=a.snr_db,
        )
        for a in example.annotations
    ]


def _pixel_rect(t_lo, t_hi, f_lo, f_hi, size: int) -> tuple[int, int, int, int]:
    """(col0, col1, row0, row1), end-exclusive: col = floor(t*size),
    row = floor((f+0.5)*size)."""
    c0 = max(0, int(np.floor(t_lo * size)))
    c1 = min(size, int(np.floor(t_hi * size)))
    r0 = max(0, int(np.floor((f_lo + 0.5) * size)))
    r1 = min(size, int(np.floor((f_hi + 0.5) * size)))
    return c0, c1, r0, r1


def to_mask(example: WidebandExample, granularity: LabelGranularity,
            size: int = MASK_SIZE) -> np.ndarray:
    """Semantic mask with ones inside every annotation rectangle; a single
    (size, size) plane for detection, per-class channels otherwise."""
    single = granularity is LabelGranularity.DETECTION1
    shape = (size, size) if single else (granularity.num_classes, size, size)
    mask = np.zeros(shape, dtype=np.uint8)
    for a in example.annotations:
        c0, c1, r0, r1 = _pixel_rect(a.t_start, a.t_stop, a.f_lo, a.f_hi, size)
        if c1 <= c0 or r1 <= r0:
            continue
        if single:
            mask[r0:r1, c0:c1] = 1
        else:
            mask[_class_for(a, granularity), r0:r1, c0:c1] = 1
    return mask


def _plane_boxes(plane: np.ndarray, class_index: int, size: int) -> list[BoxTarget]:
    labeled, count = ndimage.label(plane >= 0.5, structure=_FOUR_CONNECTED)
    boxes = []
    for sl in ndimage.find_objects(labeled):
        if sl is None:
            continue
        r, c = sl
        t_lo, t_hi = c.start / size, c.stop / size
        f_lo, f_hi = r.start / size - 0.5, r.stop / size - 0.5
        boxes.append(
            BoxTarget(
                t_center=(t_lo + t_hi) / 2,
                f_center=(f_lo + f_hi) / 2,
                duration=t_hi - t_lo,
                bandwidth=f_hi - f_lo,
                class_index=class_index,
            )
        )
    return boxes


def mask_to_boxes(mask: np.ndarray) -> list[BoxTarget]:
    """Tight bounding boxes of the 4-connected components of the binarized
    mask (threshold 0.5); channel index becomes the class index."""
    mask = np.asarray(mask)
    if mask.ndim == 2:
        return _plane_boxes(mask, 0, mask.shape[-1])
    if mask.ndim == 3:
        out: list[BoxTarget] = []
        for k in range(mask.shape[0]):
            out.extend(_plane_boxes(mask[k], k, mask.shape[-1]))
        return out
    raise ParameterError("mask must be 2-D or (channels, h, w)")


def box_score_from_mask(prob_mask: np.ndarray, box: BoxTarget) -> float:
    """Mean pixel probability inside the box rectangle."""
    prob_mask = np.asarray(prob_mask, dtype=float)
    if prob_mask.ndim != 2:
        raise ParameterError("probability mask must be 2-D")
    size = prob_mask.shape[-1]
    c0, c1, r0, r1 = _pixel_rect(box.t_lo, box.t_hi, box.f_lo, box.f_hi, size)
    if c1 <= c0 or r1 <= r0:
        raise ParameterError("box covers no pixels")
    return float(prob_mask[r0:r1, c0:c1].mean())


def scored_boxes_from_mask(prob_mask: np.ndarray) -> list[BoxTarget]:
    """Segmentation post-processing: components of the thresholded mask,
    each scored by its mean in-box probability."""
    boxes = mask_to_boxes(prob_mask)
    for b in boxes:
        b.score = box_score_from_mask(prob_mask, b)
    return boxes


__all__ = [
    "LabelGranularity",
    "BoxTarget",
    "MASK_SIZE",
    "to_boxes",
    "to_mask",
    "mask_to_boxes",
    "box_score_from_mask",
    "scored_boxes_from_mask",
]
