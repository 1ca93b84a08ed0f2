"""Extraction jobs: walk the dataset manifest, run the backbone over
diagrams or clip windows, and write one embedding table per job."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch
from PIL import Image

from .backbones import build_image_backbone, build_video_backbone
from .emb import write_emb
from .preprocess import prepare_clip, prepare_diagram

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass
class ExtractJob:
    manifest: str
    media_root: str
    modality: str                     # "diagram" or "clip"
    backbone: str = ""
    out: str = ""
    windows: str | None = None        # clip jobs: JSON list of windows
    weights: str | None = None
    seed: int = 0
    batch_size: int = 8

    def __post_init__(self):
        if self.modality not in ("diagram", "clip"):
            raise ValueError(f"unknown modality {self.modality!r}")
        if not self.backbone:
            self.backbone = "resnet50" if self.modality == "diagram" else "twopath"


def manifest_diagram_ids(manifest_path) -> list[str]:
    with open(manifest_path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    ids: list[str] = []
    for manual in doc.get("manuals", []):
        for key in ("steps", "pages"):
            for entry in manual.get(key, []):
                ids.append(entry if isinstance(entry, str) else entry["diagram_id"])
    return ids


def resolve_image(media_root, diagram_id) -> str:
    for ext in IMAGE_EXTENSIONS:
        path = os.path.join(media_root, diagram_id + ext)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(f"no image for diagram {diagram_id!r} under {media_root}")


def load_frames(path) -> np.ndarray:
    """Frames as (T, H, W, 3) uint8 from a .npy dump, a directory of
    numbered frame images, or a video file (requires OpenCV)."""
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.lower().endswith(IMAGE_EXTENSIONS))
        if not names:
            raise FileNotFoundError(f"no frame images in {path}")
        return np.stack([np.asarray(Image.open(os.path.join(path, n)).convert("RGB")) for n in names])
    if path.endswith(".npy"):
        frames = np.load(path)
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise ValueError(f"{path}: expected (T, H, W, 3) frames, got {frames.shape}")
        return frames.astype(np.uint8, copy=False)
    try:
        import cv2
    except ImportError as e:
        raise ValueError(f"{path}: decoding video files requires OpenCV") from e
    cap = cv2.VideoCapture(path)
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(cv2.cvtColor(frame, cv2.COLOR_BGR2RGB))
    cap.release()
    if not frames:
        raise ValueError(f"{path}: no decodable frames")
    return np.stack(frames)


def extract_diagram_embeddings(job: ExtractJob) -> dict[str, np.ndarray]:
    """One pooled vector per diagram id in the manifest; writes job.out
    when set and returns the id -> vector mapping."""
    ids = manifest_diagram_ids(job.manifest)
    model = build_image_backbone(job.backbone, job.weights, job.seed)
    entries: dict[str, np.ndarray] = {}
    with torch.no_grad():
        for lo in range(0, len(ids), job.batch_size):
            chunk = ids[lo:lo + job.batch_size]
            batch = torch.from_numpy(np.stack([
                prepare_diagram(Image.open(resolve_image(job.media_root, d))) for d in chunk
            ]))
            feats = model(batch).numpy()
            if not np.all(np.isfinite(feats)):
                raise FloatingPointError("non-finite diagram features")
            for d, vec in zip(chunk, feats):
                entries[d] = vec
    if job.out:
        write_emb(entries, model.dim, job.out)
    return entries


def load_windows(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    windows = doc["windows"] if isinstance(doc, dict) else doc
    for w in windows:
        if "id" not in w or "source" not in w:
            raise ValueError(f"window missing id/source: {w}")
    return windows


def extract_clip_embeddings(job: ExtractJob) -> dict[str, np.ndarray]:
    """One vector per clip window listed in job.windows; sources are
    loaded once and shared across their windows."""
    if not job.windows:
        raise ValueError("clip jobs need a windows file")
    windows = load_windows(job.windows)
    model = build_video_backbone(job.backbone, job.weights, job.seed)
    entries: dict[str, np.ndarray] = {}
    cache: dict[str, np.ndarray] = {}
    with torch.no_grad():
        for w in windows:
            source = os.path.join(job.media_root, w["source"])
            if source not in cache:
                cache[source] = load_frames(source)
            slow, fast = prepare_clip(cache[source], int(w.get("frame_start", 0)))
            vec = model(torch.from_numpy(slow[None]), torch.from_numpy(fast[None]))[0].numpy()
            if not np.all(np.isfinite(vec)):
                raise FloatingPointError(f"non-finite clip features for {w['id']!r}")
            entries[w["id"]] = vec
    if job.out:
        write_emb(entries, model.dim, job.out)
    return entries
