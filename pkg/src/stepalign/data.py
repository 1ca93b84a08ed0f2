"""Dataset model (manuals, diagrams, videos, segments) and the binary
embedding-table file format shared with external feature extractors.

Manifest is a single JSON document with top-level keys ``manuals``,
``videos`` and ``splits``; times are in seconds, indices are 1-based.
Embedding tables use the ``.emb`` container: magic ``EMB1``, little-endian
u32 dim, u64 count, then per entry u16 id-length + UTF-8 id + dim f32.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

EMB_MAGIC = b"EMB1"


class ManifestError(ValueError):
    """Raised when a manifest fails to parse or cross-link."""


class EmbeddingFormatError(ValueError):
    """Raised when an .emb file is malformed."""


@dataclass(frozen=True)
class DiagramRef:
    diagram_id: str
    manual_id: str
    index: int  # 1-based within its granularity
    granularity: str  # "step" or "page"


@dataclass(frozen=True)
class Manual:
    manual_id: str
    furniture_id: str
    steps: tuple[DiagramRef, ...]
    pages: tuple[DiagramRef, ...]

    @property
    def num_steps(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Segment:
    segment_id: str
    t_start: float
    t_end: float
    gt_step_index: int | None = None
    gt_page_index: int | None = None


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    manual_id: str
    duration: float
    fps: float
    segments: tuple[Segment, ...]
    attributes: dict = field(default_factory=dict, hash=False, compare=False)


@dataclass(frozen=True)
class Dataset:
    manuals: dict[str, Manual]
    videos: dict[str, VideoRecord]
    splits: dict[str, str]  # video_id -> train/val/test
    # raw (video_id, split) assignments as they appeared in the manifest;
    # the list form of `splits` can assign one video twice
    split_pairs: tuple[tuple[str, str], ...] = ()

    def videos_in_split(self, split: str) -> list[VideoRecord]:
        return [v for vid, v in sorted(self.videos.items()) if self.splits.get(vid) == split]

    def labeled_segments(self, split: str, granularity: str = "step"):
        """(video, segment) pairs carrying ground truth at the given granularity."""
        out = []
        for video in self.videos_in_split(split):
            for seg in video.segments:
                idx = seg.gt_step_index if granularity == "step" else seg.gt_page_index
                if idx is not None:
                    out.append((video, seg))
        return out

    def summary(self) -> dict:
        n_furn = len({m.furniture_id for m in self.manuals.values()})
        return {
            "manuals": len(self.manuals),
            "furniture": n_furn,
            "videos": len(self.videos),
            "segments": sum(len(v.segments) for v in self.videos.values()),
            "steps": sum(m.num_steps for m in self.manuals.values()),
            "pages": sum(len(m.pages) for m in self.manuals.values()),
        }


def _parse_manual(entry: dict) -> Manual:
    mid = entry["manual_id"]
    steps = tuple(
        DiagramRef(diagram_id=d, manual_id=mid, index=j + 1, granularity="step")
        for j, d in enumerate(entry["steps"])
    )
    pages = tuple(
        DiagramRef(diagram_id=d, manual_id=mid, index=j + 1, granularity="page")
        for j, d in enumerate(entry.get("pages", []))
    )
    if not steps:
        raise ManifestError(f"manual {mid!r} has no steps")
    return Manual(manual_id=mid, furniture_id=entry.get("furniture_id", mid), steps=steps, pages=pages)


def _parse_video(entry: dict, manuals: dict[str, Manual]) -> VideoRecord:
    vid = entry["video_id"]
    mid = entry["manual_id"]
    if mid not in manuals:
        raise ManifestError(f"video {vid!r} references unknown manual {mid!r}")
    manual = manuals[mid]
    duration = float(entry["duration"])
    if duration <= 0:
        raise ManifestError(f"video {vid!r} has non-positive duration")
    segments = []
    for s in entry.get("segments", []):
        seg = Segment(
            segment_id=s["segment_id"],
            t_start=float(s["t_start"]),
            t_end=float(s["t_end"]),
            gt_step_index=s.get("gt_step_index"),
            gt_page_index=s.get("gt_page_index"),
        )
        if not (0 <= seg.t_start < seg.t_end <= duration + 1e-9):
            raise ManifestError(f"segment {seg.segment_id!r} outside [0, duration] of video {vid!r}")
        if seg.gt_step_index is not None and not (1 <= seg.gt_step_index <= manual.num_steps):
            raise ManifestError(f"segment {seg.segment_id!r} has invalid step index {seg.gt_step_index}")
        if seg.gt_page_index is not None and not (1 <= seg.gt_page_index <= len(manual.pages)):
            raise ManifestError(f"segment {seg.segment_id!r} has invalid page index {seg.gt_page_index}")
        segments.append(seg)
    return VideoRecord(
        video_id=vid,
        manual_id=mid,
        duration=duration,
        fps=float(entry.get("fps", 30)),
        segments=tuple(segments),
        attributes=dict(entry.get("attributes", {})),
    )


def manifest_from_dict(doc: dict) -> Dataset:
    manuals = {}
    for entry in doc.get("manuals", []):
        m = _parse_manual(entry)
        if m.manual_id in manuals:
            raise ManifestError(f"duplicate manual id {m.manual_id!r}")
        manuals[m.manual_id] = m
    videos = {}
    for entry in doc.get("videos", []):
        v = _parse_video(entry, manuals)
        if v.video_id in videos:
            raise ManifestError(f"duplicate video id {v.video_id!r}")
        videos[v.video_id] = v
    raw = doc.get("splits", {})
    if raw and all(isinstance(v, list) for v in raw.values()):
        # split-name keyed form: {"train": [video ids], ...}
        pairs = [(vid, split) for split, vids in raw.items() for vid in vids]
    else:
        pairs = list(raw.items())
    splits = {}
    for vid, split in pairs:
        if vid not in videos:
            raise ManifestError(f"split entry references unknown video {vid!r}")
        if split not in ("train", "val", "test"):
            raise ManifestError(f"unknown split {split!r} for video {vid!r}")
        splits[vid] = split
    return Dataset(manuals=manuals, videos=videos, splits=splits, split_pairs=tuple(pairs))


def load_manifest(path) -> Dataset:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path} is not valid JSON: {e}") from e
    return manifest_from_dict(doc)


def manifest_to_dict(ds: Dataset) -> dict:
    doc = {"manuals": [], "videos": [], "splits": dict(sorted(ds.splits.items()))}
    for mid in sorted(ds.manuals):
        m = ds.manuals[mid]
        doc["manuals"].append(
            {
                "manual_id": m.manual_id,
                "furniture_id": m.furniture_id,
                "steps": [d.diagram_id for d in m.steps],
                "pages": [d.diagram_id for d in m.pages],
            }
        )
    for vid in sorted(ds.videos):
        v = ds.videos[vid]
        doc["videos"].append(
            {
                "video_id": v.video_id,
                "manual_id": v.manual_id,
                "duration": v.duration,
                "fps": v.fps,
                "attributes": v.attributes,
                "segments": [
                    {
                        "segment_id": s.segment_id,
                        "t_start": s.t_start,
                        "t_end": s.t_end,
                        "gt_step_index": s.gt_step_index,
                        "gt_page_index": s.gt_page_index,
                    }
                    for s in v.segments
                ],
            }
        )
    return doc


def save_manifest(ds: Dataset, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(manifest_to_dict(ds), f, indent=1, sort_keys=True)
    os.replace(tmp, path)


class EmbeddingTable:
    """Immutable id -> float32 vector map with a uniform dimension."""

    def __init__(self, dim: int, entries: dict[str, np.ndarray]):
        if dim <= 0:
            raise EmbeddingFormatError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self.entries: dict[str, np.ndarray] = {}
        for key, vec in entries.items():
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (self.dim,):
                raise EmbeddingFormatError(f"entry {key!r} has shape {arr.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(arr)):
                raise EmbeddingFormatError(f"entry {key!r} contains non-finite values")
            arr.flags.writeable = False
            self.entries[key] = arr

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries

    def __getitem__(self, key) -> np.ndarray:
        return self.entries[key]

    def get(self, key, default=None):
        return self.entries.get(key, default)


def write_embedding_table(table: EmbeddingTable, path) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(EMB_MAGIC)
        f.write(struct.pack("<IQ", table.dim, len(table.entries)))
        for key, vec in table.entries.items():
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise EmbeddingFormatError(f"id too long: {key!r}")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(vec.astype("<f4", copy=False).tobytes())
    os.replace(tmp, path)


def read_embedding_table(path) -> EmbeddingTable:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != EMB_MAGIC:
            raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
        header = f.read(12)
        if len(header) != 12:
            raise EmbeddingFormatError(f"{path}: truncated header")
        dim, count = struct.unpack("<IQ", header)
        if dim <= 0:
            raise EmbeddingFormatError(f"{path}: dim must be positive, got {dim}")
        entries = {}
        vec_bytes = 4 * dim
        for i in range(count):
            lb = f.read(2)
            if len(lb) != 2:
                raise EmbeddingFormatError(f"{path}: truncated at entry {i} of {count}")
            (idlen,) = struct.unpack("<H", lb)
            raw = f.read(idlen)
            if len(raw) != idlen:
                raise EmbeddingFormatError(f"{path}: truncated id at entry {i}")
            key = raw.decode("utf-8")
            payload = f.read(vec_bytes)
            if len(payload) != vec_bytes:
                raise EmbeddingFormatError(f"{path}: truncated vector at entry {i} ({key!r})")
            if key in entries:
                raise EmbeddingFormatError(f"{path}: duplicate id {key!r}")
            entries[key] = np.frombuffer(payload, dtype="<f4").astype(np.float32)
        if f.read(1):
            raise EmbeddingFormatError(f"{path}: trailing bytes after {count} entries")
    return EmbeddingTable(dim=dim, entries=entries)


@dataclass
class ValidationReport:
    missing_embeddings: list[str] = field(default_factory=list)
    dim_mismatches: list[str] = field(default_factory=list)
    leakage: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.missing_embeddings or self.dim_mismatches or self.leakage)


def segment_embedding_ids(table: EmbeddingTable, segment_id: str) -> list[str]:
    """Embedding ids covering a segment: either the bare segment id or
    per-clip ids of the form ``<segment_id>#<k>``."""
    if segment_id in table:
        return [segment_id]
    prefix = segment_id + "#"
    return sorted(k for k in table.entries if k.startswith(prefix))


def validate_dataset(ds: Dataset, diagram_table: EmbeddingTable, clip_table: EmbeddingTable) -> ValidationReport:
    report = ValidationReport()
    for m in ds.manuals.values():
        for d in list(m.steps) + list(m.pages):
            if d.diagram_id not in diagram_table:
                report.missing_embeddings.append(f"diagram:{d.diagram_id}")
    for v in ds.videos.values():
        for seg in v.segments:
            if not segment_embedding_ids(clip_table, seg.segment_id):
                report.missing_embeddings.append(f"segment:{seg.segment_id}")
    seen: dict[str, str] = {}
    pairs = ds.split_pairs or tuple(ds.splits.items())
    for vid, split in pairs:
        if vid in seen and seen[vid] != split and vid not in report.leakage:
            report.leakage.append(vid)
        seen.setdefault(vid, split)
    return report
