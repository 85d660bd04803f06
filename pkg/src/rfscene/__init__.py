"""Synthetic wideband RF scene toolkit.

Generates multi-signal complex-baseband examples across 53 modulation
classes, applies channel impairments and training-time augmentations with
annotation bookkeeping, renders spectrogram/box/mask targets, and scores
detections with COCO-convention metrics.
"""

from .dsp import (
    FilterSpec,
    ParameterError,
    SpectrogramConfig,
    design_filter,
    frequency_translate,
    measure_power,
    resample,
    spectrogram,
)
from .modem import (
    FskSpec,
    LinearModSpec,
    ModFamily,
    OfdmSpec,
    SignalClass,
    build_constellation,
    class_to_family,
    synthesize_class,
    synthesize_fsk,
    synthesize_linear,
    synthesize_ofdm,
)
from .scenes import (
    SceneSpec,
    SignalAnnotation,
    SourcePlan,
    WidebandExample,
    measure_es_n0,
    plan_scene,
    render_example,
)
from .impair import (
    ImpairmentConfig,
    RfImpairmentVariant,
    add_awgn,
    apply_rf_impairment,
    frequency_shift,
    impair_example,
    rand_augment,
    random_resample,
    spectral_inversion,
    time_shift,
)
from .augment import (
    apply_iq_augmentation,
    apply_spec_augmentation,
    mix_augmentation,
)
from .targets import (
    BoxTarget,
    LabelGranularity,
    box_score_from_mask,
    mask_to_boxes,
    scored_boxes_from_mask,
    to_boxes,
    to_mask,
)
from .metrics import EvalConfig, EvalReport, PredBox, evaluate, iou, mar_vs_snr
from .store import (
    DatasetVariant,
    RecordStore,
    derive_example_seed,
    generate_dataset,
    generate_example,
    read_record,
)

__version__ = "0.1.0"
