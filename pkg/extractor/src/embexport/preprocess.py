"""Pixel-space preparation for the backbones.

Diagrams: the long side is down-sampled to 224 and the short side is
padded with white pixels to a square 224x224 input.

Clips: frames are resized so the short side is 224, center-cropped to
224x224, and windows shorter than 64 frames are back-padded by
repeating the final frame. The slow path sub-samples 8 of the 64
frames uniformly, the fast path 32."""

from __future__ import annotations

import numpy as np
from PIL import Image

SIDE = 224
CLIP_FRAMES = 64
SLOW_FRAMES = 8
FAST_FRAMES = 32


def prepare_diagram(image: Image.Image) -> np.ndarray:
    """Resize long side to 224, pad short side with white; returns
    float32 (3, 224, 224) in [0, 1]."""
    image = image.convert("RGB")
    w, h = image.size
    scale = SIDE / max(w, h)
    new_w, new_h = max(1, round(w * scale)), max(1, round(h * scale))
    image = image.resize((new_w, new_h), Image.BILINEAR)
    canvas = Image.new("RGB", (SIDE, SIDE), (255, 255, 255))
    canvas.paste(image, ((SIDE - new_w) // 2, (SIDE - new_h) // 2))
    arr = np.asarray(canvas, dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def prepare_frame(frame: np.ndarray) -> np.ndarray:
    """Resize the short side to 224 and center-crop; returns float32
    (3, 224, 224) in [0, 1]. Input is (H, W, 3) uint8."""
    image = Image.fromarray(frame)
    w, h = image.size
    scale = SIDE / min(w, h)
    new_w, new_h = max(SIDE, round(w * scale)), max(SIDE, round(h * scale))
    image = image.resize((new_w, new_h), Image.BILINEAR)
    left = (new_w - SIDE) // 2
    top = (new_h - SIDE) // 2
    image = image.crop((left, top, left + SIDE, top + SIDE))
    arr = np.asarray(image, dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def window_frames(frames: np.ndarray, frame_start: int, frame_len: int = CLIP_FRAMES) -> np.ndarray:
    """Cut [frame_start, frame_start + frame_len) out of a (T, H, W, 3)
    array, repeating the last available frame when the source runs out."""
    if frame_start < 0 or frame_start >= len(frames):
        raise IndexError(f"frame_start {frame_start} outside 0..{len(frames) - 1}")
    window = frames[frame_start:frame_start + frame_len]
    if len(window) < frame_len:
        pad = np.repeat(window[-1:], frame_len - len(window), axis=0)
        window = np.concatenate([window, pad], axis=0)
    return window


def pathway_indices(frame_len: int = CLIP_FRAMES) -> tuple[np.ndarray, np.ndarray]:
    slow = np.arange(0, frame_len, frame_len // SLOW_FRAMES)
    fast = np.arange(0, frame_len, frame_len // FAST_FRAMES)
    return slow, fast


def prepare_clip(frames: np.ndarray, frame_start: int) -> tuple[np.ndarray, np.ndarray]:
    """Slow and fast pathway tensors for one window; each is float32
    (3, T, 224, 224)."""
    window = window_frames(frames, frame_start)
    slow_idx, fast_idx = pathway_indices(len(window))
    prepared = {i: prepare_frame(window[i]) for i in set(slow_idx) | set(fast_idx)}
    slow = np.stack([prepared[i] for i in slow_idx], axis=1)
    fast = np.stack([prepared[i] for i in fast_idx], axis=1)
    return slow, fast
