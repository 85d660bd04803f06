# Deterministic dataset generation and the on-disk record store.
#
# Layout: <dir>/manifest.jsonl (one JSON header line, then one line per
# record with offset/length/digest) and <dir>/records.bin (concatenated
# payloads). Payload: magic, version, index, sample count, interleaved
# float32 I/Q (little-endian), then a length-prefixed JSON annotation block.
# Digests are the first 8 bytes of SHA-256, hex-encoded.
from __future__ import annotations

import hashlib
import json
import multiprocessing as mp
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .dsp import ParameterError
from .impair import ImpairmentConfig, impair_example
from .modem import ModFamily
from .scenes import SceneSpec, SignalAnnotation, WidebandExample, plan_scene, render_example

MAGIC = b"WBRS"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")
_ANN_LEN = struct.Struct("<I")
_M64 = (1 << 64) - 1

CLEAN_SNR_RANGE_DB = (20.0, 40.0)
IMPAIRED_SNR_RANGE_DB = (0.0, 30.0)


class StoreError(Exception):
    """Base error for record-store problems."""


class RecordNotFoundError(StoreError):
    pass


class CorruptRecordError(StoreError):
    pass


class DatasetVariant(Enum):
    CLEAN_TRAIN = ("clean-train", 250_000, False)
    CLEAN_VAL = ("clean-val", 25_000, False)
    IMPAIRED_TRAIN = ("impaired-train", 250_000, True)
    IMPAIRED_VAL = ("impaired-val", 25_000, True)

    def __init__(self, tag: str, size: int, impaired: bool):
        self.tag = tag
        self.size = size
        self.impaired = impaired

    @classmethod
    def from_tag(cls, tag: str) -> "DatasetVariant":
        for v in cls:
            if v.tag == tag:
                return v
        raise ParameterError(f"unknown dataset variant {tag!r}")

    def scene_spec(self) -> SceneSpec:
        snr = IMPAIRED_SNR_RANGE_DB if self.impaired else CLEAN_SNR_RANGE_DB
        return SceneSpec(snr_range_db=snr)

    def impairment_config(self) -> ImpairmentConfig | None:
        return ImpairmentConfig() if self.impaired else None


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def _variant_tag_u64(variant: DatasetVariant) -> int:
    digest = hashlib.sha256(variant.tag.encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_example_seed(dataset_seed: int, variant: DatasetVariant, index: int) -> int:
    """Stable, collision-free per-example seed (a chain of splitmix64
    bijections, so distinct inputs always yield distinct outputs)."""
    if not (0 <= index < variant.size):
        raise ParameterError(f"index {index} out of range for {variant.tag}")
    h = _splitmix64(index & _M64)
    h = _splitmix64(h ^ _variant_tag_u64(variant))
    return _splitmix64(h ^ (dataset_seed & _M64))


def generate_example(variant: DatasetVariant, index: int, dataset_seed: int) -> WidebandExample:
    """Plan, render, and (for impaired variants) impair one example; pure
    function of (variant, index, dataset_seed)."""
    seed = derive_example_seed(dataset_seed, variant, index)
    rng = np.random.default_rng(seed)
    spec = variant.scene_spec()
    plans = plan_scene(spec, rng)
    example = render_example(plans, spec, rng)
    cfg = variant.impairment_config()
    if cfg is not None:
        example = impair_example(example, cfg, rng)
    example.meta.update(seed=seed, variant=variant.tag, index=index)
    return example


# ---------------------------------------------------------------------------
# Record serialization
# ---------------------------------------------------------------------------

def _annotation_payload(example: WidebandExample) -> bytes:
    anns = [
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
    ]
    meta = dict(example.meta)
    meta["seed"] = str(meta.get("seed", ""))  # u64-safe for JSON consumers
    doc = {"annotations": anns, "meta": meta}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def encode_record(example: WidebandExample, index: int) -> bytes:
    samples = np.ascontiguousarray(example.iq.astype(np.complex64))
    raw = samples.view(np.float32)
    if raw.dtype.byteorder not in ("<", "="):  # big-endian hosts
        raw = raw.astype("<f4")
    ann = _annotation_payload(example)
    return b"".join([
        _HEADER.pack(MAGIC, FORMAT_VERSION, index, samples.size),
        raw.tobytes(),
        _ANN_LEN.pack(len(ann)),
        ann,
    ])


def decode_record(payload: bytes) -> WidebandExample:
    magic, version, _index, count = _HEADER.unpack_from(payload, 0)
    if magic != MAGIC:
        raise CorruptRecordError("bad record magic")
    if version != FORMAT_VERSION:
        raise CorruptRecordError(f"unsupported record version {version}")
    off = _HEADER.size
    n_bytes = count * 8
    raw = np.frombuffer(payload, dtype="<f4", count=count * 2, offset=off)
    samples = raw.view(np.complex64).copy()
    off += n_bytes
    (ann_len,) = _ANN_LEN.unpack_from(payload, off)
    off += _ANN_LEN.size
    doc = json.loads(payload[off : off + ann_len].decode())
    annotations = [
        SignalAnnotation(
            class_index=a["class_index"],
            family=ModFamily(a["family"]),
            t_start=a["t_start"],
            duration=a["duration"],
            f_center=a["f_center"],
            bandwidth=a["bandwidth"],
            snr_db=a["snr_db"],
        )
        for a in doc["annotations"]
    ]
    return WidebandExample(iq=samples, annotations=annotations, meta=doc["meta"])


def record_digest(payload: bytes) -> str:
    return hashlib.sha256(payload).digest()[:8].hex()


# ---------------------------------------------------------------------------
# Store writer / reader
# ---------------------------------------------------------------------------

MANIFEST_NAME = "manifest.jsonl"
RECORDS_NAME = "records.bin"
INCOMPLETE_MARKER = "INCOMPLETE"


@dataclass
class _ManifestEntry:
    index: int
    offset: int
    length: int
    digest: str


class RecordStore:
    """Reader over a completed store directory."""

    def __init__(self, path: Path):
        self.path = Path(path)
        manifest = self.path / MANIFEST_NAME
        if (self.path / INCOMPLETE_MARKER).exists():
            raise StoreError(f"store at {self.path} is marked incomplete")
        if not manifest.exists():
            raise StoreError(f"no manifest at {manifest}")
        lines = manifest.read_text().splitlines()
        if not lines:
            raise StoreError("empty manifest")
        try:
            self.header = json.loads(lines[0])
            entries = [json.loads(ln) for ln in lines[1:] if ln.strip()]
        except json.JSONDecodeError as e:
            raise StoreError(f"manifest is not valid JSON lines: {e}") from None
        if self.header.get("format") != "wbrs" or self.header.get("version") != FORMAT_VERSION:
            raise StoreError("unsupported store format")
        self.entries = [_ManifestEntry(e["index"], e["offset"], e["length"], e["digest"])
                        for e in entries]
        if len(self.entries) != int(self.header.get("count", -1)):
            raise StoreError("manifest count disagrees with its entries")
        self.records_path = self.path / self.header.get("records_file", RECORDS_NAME)
        if not self.records_path.exists():
            raise StoreError(f"missing records file {self.records_path}")

    @property
    def count(self) -> int:
        return len(self.entries)

    @property
    def variant_tag(self) -> str:
        return self.header.get("variant", "")

    def read_payload(self, index: int) -> bytes:
        if not (0 <= index < self.count):
            raise RecordNotFoundError(f"record {index} not in store of {self.count}")
        entry = self.entries[index]
        with open(self.records_path, "rb") as fh:
            fh.seek(entry.offset)
            payload = fh.read(entry.length)
        if len(payload) != entry.length:
            raise CorruptRecordError(f"record {index} truncated")
        if record_digest(payload) != entry.digest:
            raise CorruptRecordError(f"record {index} digest mismatch")
        return payload

    def read_record(self, index: int) -> WidebandExample:
        return decode_record(self.read_payload(index))

    def __iter__(self):
        for i in range(self.count):
            yield self.read_record(i)

    def verify(self) -> bool:
        try:
            for i in range(self.count):
                self.read_payload(i)
        except StoreError:
            return False
        return True


def read_record(store: RecordStore, index: int) -> WidebandExample:
    return store.read_record(index)


def _record_bytes(args) -> bytes:
    variant_tag, dataset_seed, index = args
    variant = DatasetVariant.from_tag(variant_tag)
    return encode_record(generate_example(variant, index, dataset_seed), index)


def _is_complete(path: Path, variant: DatasetVariant, dataset_seed: int, count: int) -> bool:
    try:
        store = RecordStore(path)
    except StoreError:
        return False
    if (store.variant_tag != variant.tag or store.count != count
            or store.header.get("seed") != str(dataset_seed)):
        return False
    return store.verify()


def generate_dataset(
    variant: DatasetVariant,
    dataset_seed: int,
    out_path,
    count: int | None = None,
    workers: int = 1,
) -> RecordStore:
    """Generate `count` records (default: the variant's canonical size) into
    `out_path`. The result is byte-identical for any worker count, and a
    rerun onto a complete matching store verifies digests and is a no-op.
    """
    count = variant.size if count is None else int(count)
    if count <= 0 or count > variant.size:
        raise ParameterError("count must be in 1..variant size")
    out = Path(out_path)
    if _is_complete(out, variant, dataset_seed, count):
        return RecordStore(out)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / INCOMPLETE_MARKER
    marker.write_text("generation in progress\n")
    jobs = [(variant.tag, dataset_seed, i) for i in range(count)]
    entries = []
    try:
        with open(out / RECORDS_NAME, "wb") as records:
            if workers > 1:
                chunk = max(1, count // (workers * 8))
                with mp.Pool(workers) as pool:
                    payload_iter = pool.imap(_record_bytes, jobs, chunksize=chunk)
                    offset = 0
                    for i, payload in enumerate(payload_iter):
                        records.write(payload)
                        entries.append(_ManifestEntry(i, offset, len(payload),
                                                      record_digest(payload)))
                        offset += len(payload)
            else:
                offset = 0
                for i, job in enumerate(jobs):
                    payload = _record_bytes(job)
                    records.write(payload)
                    entries.append(_ManifestEntry(i, offset, len(payload),
                                                  record_digest(payload)))
                    offset += len(payload)
        header = {
            "format": "wbrs",
            "version": FORMAT_VERSION,
            "variant": variant.tag,
            "seed": str(dataset_seed),
            "count": count,
            "num_iq_samples": variant.scene_spec().num_iq_samples,
            "records_file": RECORDS_NAME,
        }
        with open(out / MANIFEST_NAME, "w") as mf:
            mf.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
            for e in entries:
                mf.write(json.dumps(
                    {"index": e.index, "offset": e.offset, "length": e.length,
                     "digest": e.digest},
                    sort_keys=True, separators=(",", ":")) + "\n")
    except BaseException:
        # leave the marker in place: the store is unusable as-is
        raise
    marker.unlink()
    return RecordStore(out)
