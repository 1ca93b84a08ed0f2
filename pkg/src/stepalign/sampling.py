"""Segment/clip sampling, batch construction and the greedy balanced splitter.

Actions are cut into consecutive 10 s segments; a short tail segment is
end-aligned and marked padded. Each segment yields 64-frame clip windows:
one random window for training, the window at frame 0 for validation and
five evenly spaced windows for testing. Windows that run past the segment
end are back-padded by repeating the final frame (the padding itself is
applied by whoever decodes pixels; here it only affects bookkeeping).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Manual, Segment, VideoRecord

FPS = 30
CLIP_FRAMES = 64
SEGMENT_SECONDS = 10.0
TEST_CLIPS = 5


@dataclass(frozen=True)
class SegmentWindow:
    t_start: float
    t_end: float
    padded: bool = False


@dataclass(frozen=True)
class ClipWindow:
    segment_id: str
    frame_start: int
    frame_len: int = CLIP_FRAMES
    fps: int = FPS


def segment_action(t0: float, t1: float, fps: int = FPS) -> list[SegmentWindow]:
    """Cut [t0, t1) into consecutive 10 s windows; the residue becomes an
    end-aligned padded window."""
    if t1 <= t0:
        raise ValueError(f"non-positive interval [{t0}, {t1})")
    windows = []
    t = t0
    while t + SEGMENT_SECONDS <= t1 + 1e-9:
        windows.append(SegmentWindow(t, t + SEGMENT_SECONDS))
        t += SEGMENT_SECONDS
    if t < t1 - 1e-9:
        windows.append(SegmentWindow(max(t0, t1 - SEGMENT_SECONDS), t1, padded=True))
    return windows


def segment_frame_count(segment: Segment, fps: int = FPS) -> int:
    return max(1, int(round((segment.t_end - segment.t_start) * fps)))


def eval_clip_starts(n_frames: int) -> list[int]:
    span = max(0, n_frames - CLIP_FRAMES)
    return [int(round(k * span / (TEST_CLIPS - 1))) for k in range(TEST_CLIPS)]


def sample_clips(segment: Segment, mode: str, seed: int = 0, fps: int = FPS) -> list[ClipWindow]:
    n_frames = segment_frame_count(segment, fps)
    if mode == "train":
        span = max(0, n_frames - CLIP_FRAMES)
        rng = np.random.default_rng(seed)
        start = int(rng.integers(0, span + 1))
        starts = [start]
    elif mode == "val":
        starts = [0]
    elif mode == "test":
        starts = eval_clip_starts(n_frames)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return [ClipWindow(segment.segment_id, s, CLIP_FRAMES, fps) for s in starts]


def slowfast_indices(frame_len: int = CLIP_FRAMES) -> tuple[np.ndarray, np.ndarray]:
    """Uniformly spaced slow (8) and fast (32) frame indices of a clip."""
    slow = np.arange(0, frame_len, frame_len // 8)
    fast = np.arange(0, frame_len, frame_len // 32)
    return slow, fast


@dataclass(frozen=True)
class PairBatch:
    """Clip/diagram positive pairs; diagrams may repeat (many-to-one)."""

    segment_ids: tuple[str, ...]
    diagram_ids: tuple[str, ...]
    rates_video: np.ndarray
    rates_diagram: np.ndarray


@dataclass(frozen=True)
class ManualBatch:
    """Clips with the full ordered diagram list of each clip's manual.

    Manuals are stored once; each clip holds an index into `manuals`
    plus its 1-based ground-truth position within that manual.
    """

    segment_ids: tuple[str, ...]
    rates_video: np.ndarray
    manual_index: tuple[int, ...]  # per clip
    gt_position: tuple[int, ...]  # per clip, 1-based
    manuals: tuple[tuple[str, ...], ...]  # per manual, ordered diagram ids

    @property
    def manual_sizes(self) -> np.ndarray:
        return np.array([len(self.manuals[i]) for i in self.manual_index])


def _labeled_pool(ds: Dataset, granularity: str, split: str = "train"):
    pool = []
    for video, seg in ds.labeled_segments(split, granularity):
        manual = ds.manuals[video.manual_id]
        diagrams = manual.steps if granularity == "step" else manual.pages
        idx = seg.gt_step_index if granularity == "step" else seg.gt_page_index
        pool.append((video, seg, manual, diagrams, idx))
    return pool


def build_pair_batch(ds: Dataset, B: int, seed: int, granularity: str = "step", split: str = "train") -> PairBatch:
    pool = _labeled_pool(ds, granularity, split)
    if not pool:
        raise ValueError(f"no labeled segments in split {split!r}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pool), size=B)
    seg_ids, diag_ids, rv, ri = [], [], [], []
    for k in picks:
        video, seg, manual, diagrams, idx = pool[k]
        seg_ids.append(seg.segment_id)
        diag_ids.append(diagrams[idx - 1].diagram_id)
        rv.append((seg.t_start + seg.t_end) / (2.0 * video.duration))
        ri.append(idx / len(diagrams))
    return PairBatch(tuple(seg_ids), tuple(diag_ids), np.array(rv), np.array(ri))


def build_manual_batch(ds: Dataset, B: int, seed: int, granularity: str = "step", split: str = "train") -> ManualBatch:
    pool = _labeled_pool(ds, granularity, split)
    if not pool:
        raise ValueError(f"no labeled segments in split {split!r}")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(pool), size=B)
    seg_ids, rv, man_idx, gt_pos = [], [], [], []
    manuals: list[tuple[str, ...]] = []
    seen: dict[str, int] = {}
    for k in picks:
        video, seg, manual, diagrams, idx = pool[k]
        key = f"{manual.manual_id}:{granularity}"
        if key not in seen:
            seen[key] = len(manuals)
            manuals.append(tuple(d.diagram_id for d in diagrams))
        seg_ids.append(seg.segment_id)
        rv.append((seg.t_start + seg.t_end) / (2.0 * video.duration))
        man_idx.append(seen[key])
        gt_pos.append(idx)
    return ManualBatch(tuple(seg_ids), np.array(rv), tuple(man_idx), tuple(gt_pos), tuple(manuals))


SPLIT_NAMES = ("train", "val", "test")


def split_dataset(videos: list[VideoRecord], ratios=(0.6, 0.2, 0.2), seed: int = 0) -> dict[str, str]:
    """Greedy balanced assignment of whole videos to train/val/test.

    Videos are placed in order of descending segment count; each goes to
    the split minimizing the summed deviation of (a) per-split segment
    counts from the target ratios and (b) per-attribute-value histograms
    from proportionality. Ties go to train.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    rng = np.random.default_rng(seed)
    order = sorted(videos, key=lambda v: (-len(v.segments), v.video_id))
    # random tie-shuffle within equal segment counts, then re-sort stably
    perm = rng.permutation(len(order))
    order = sorted((order[i] for i in perm), key=lambda v: -len(v.segments))

    attr_values: dict[tuple[str, object], dict[str, int]] = {}
    seg_counts = {s: 0 for s in SPLIT_NAMES}
    total_segments = 0
    assignment: dict[str, str] = {}

    def deviation(counts: dict[str, int], total: int) -> float:
        return sum(abs(counts[s] - r * total) for s, r in zip(SPLIT_NAMES, ratios))

    for video in order:
        nseg = max(1, len(video.segments))
        best_split, best_cost = None, None
        for cand in SPLIT_NAMES:
            seg_counts[cand] += nseg
            cost = deviation(seg_counts, total_segments + nseg)
            for key, value in sorted(video.attributes.items()):
                hist = attr_values.setdefault((key, value), {s: 0 for s in SPLIT_NAMES})
                hist[cand] += 1
                cost += deviation(hist, sum(hist.values()))
                hist[cand] -= 1
            seg_counts[cand] -= nseg
            if best_cost is None or cost < best_cost - 1e-12:
                best_split, best_cost = cand, cost
        assignment[video.video_id] = best_split
        seg_counts[best_split] += nseg
        total_segments += nseg
        for key, value in sorted(video.attributes.items()):
            hist = attr_values.setdefault((key, value), {s: 0 for s in SPLIT_NAMES})
            hist[best_split] += 1
    return assignment
