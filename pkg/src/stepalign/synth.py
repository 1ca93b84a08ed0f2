"""Synthetic datasets with known ground truth.

Diagram prototypes follow a random walk on the unit sphere so that
adjacent steps have a controllable expected cosine similarity (`drift`),
mimicking the visual similarity of successive assembly states. Each
segment's clip embedding is its ground-truth prototype plus isotropic
noise, renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, EmbeddingTable, manifest_from_dict
from .sampling import SEGMENT_SECONDS


@dataclass
class SynthConfig:
    n_manuals: int = 20
    min_steps: int = 4
    max_steps: int = 12
    min_segments_per_step: int = 1
    max_segments_per_step: int = 2
    d_raw: int = 32
    noise_sigma: float = 0.8
    drift: float = 0.7
    pages_per_manual: int = 0  # 0 -> one page per 2 steps
    seed: int = 1

    def validate(self):
        if not (1 <= self.min_steps <= self.max_steps <= 50):
            raise ValueError("step range must lie within [1, 50]")
        if self.n_manuals < 1 or self.d_raw < 2:
            raise ValueError("n_manuals and d_raw must be positive (d_raw >= 2)")
        if not (0 <= self.drift <= 1):
            raise ValueError("drift must be in [0, 1]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _walk_prototypes(rng, n: int, dim: int, drift: float) -> np.ndarray:
    """Random walk on the sphere with adjacent cosine ~= drift."""
    protos = np.zeros((n, dim))
    protos[0] = _unit(rng.normal(size=dim))
    for j in range(1, n):
        g = rng.normal(size=dim)
        g -= g @ protos[j - 1] * protos[j - 1]
        g = _unit(g)
        protos[j] = _unit(drift * protos[j - 1] + np.sqrt(max(0.0, 1 - drift**2)) * g)
    return protos


ATTRIBUTE_CHOICES = {
    "viewpoint": ["front", "side", "top"],
    "indoor": [True, False],
    "camera_motion": ["static", "moving"],
    "assemblers": [1, 2],
}


def generate(cfg: SynthConfig) -> tuple[Dataset, EmbeddingTable, EmbeddingTable]:
    """Build a manifest plus diagram and clip embedding tables."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    manuals_doc, videos_doc = [], []
    diagram_entries: dict[str, np.ndarray] = {}
    clip_entries: dict[str, np.ndarray] = {}

    for mi in range(cfg.n_manuals):
        mid = f"manual{mi:03d}"
        M = int(rng.integers(cfg.min_steps, cfg.max_steps + 1))
        protos = _walk_prototypes(rng, M, cfg.d_raw, cfg.drift)
        step_ids = [f"{mid}/step{j + 1:02d}" for j in range(M)]
        for sid, proto in zip(step_ids, protos):
            diagram_entries[sid] = proto.astype(np.float32)
        n_pages = cfg.pages_per_manual or max(1, M // 2)
        page_ids = [f"{mid}/page{p + 1:02d}" for p in range(n_pages)]
        for p, pid in enumerate(page_ids):
            # a page summarizes the steps it spans: mean of its prototypes
            span = protos[int(p * M / n_pages): max(int(p * M / n_pages) + 1, int((p + 1) * M / n_pages))]
            diagram_entries[pid] = _unit(span.mean(axis=0)).astype(np.float32)
        manuals_doc.append(
            {"manual_id": mid, "furniture_id": f"furn{mi:03d}", "steps": step_ids, "pages": page_ids}
        )

        vid = f"video{mi:03d}"
        segments = []
        t = 0.0
        for j in range(M):
            n_seg = int(rng.integers(cfg.min_segments_per_step, cfg.max_segments_per_step + 1))
            for s in range(n_seg):
                seg_id = f"{vid}/seg{len(segments):03d}"
                t_end = t + SEGMENT_SECONDS
                page_idx = min(n_pages, int(j * n_pages / M) + 1)
                segments.append(
                    {
                        "segment_id": seg_id,
                        "t_start": t,
                        "t_end": t_end,
                        "gt_step_index": j + 1,
                        "gt_page_index": page_idx,
                    }
                )
                noisy = protos[j] + cfg.noise_sigma * rng.normal(size=cfg.d_raw) / np.sqrt(cfg.d_raw)
                clip_entries[seg_id] = _unit(noisy).astype(np.float32)
                t = t_end
        attributes = {k: v[int(rng.integers(len(v)))] for k, v in ATTRIBUTE_CHOICES.items()}
        videos_doc.append(
            {
                "video_id": vid,
                "manual_id": mid,
                "duration": t,
                "fps": 30,
                "attributes": attributes,
                "segments": segments,
            }
        )

    ds = manifest_from_dict({"manuals": manuals_doc, "videos": videos_doc, "splits": {}})
    diagram_table = EmbeddingTable(cfg.d_raw, diagram_entries)
    clip_table = EmbeddingTable(cfg.d_raw, clip_entries)
    return ds, diagram_table, clip_table
