"""Progress-rate features and the trainable projection heads.

A raw encoder feature is L2-normalized, concatenated with the 2-d
sinusoidal progress feature (sin pi*r, cos pi*r), normalized again and
pushed through a two-layer head (affine, relu, affine) whose output is
L2-normalized so cosine similarity reduces to a dot product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def progress_rate_video(t_start: float, t_end: float, t_duration: float) -> float:
    if t_duration <= 0:
        raise ValueError("t_duration must be positive")
    if not (0 <= t_start <= t_end <= t_duration + 1e-9):
        raise ValueError(f"invalid clip times ({t_start}, {t_end}) for duration {t_duration}")
    return (t_start + t_end) / (2.0 * t_duration)


def progress_rate_diagram(j: int, M: int) -> float:
    if not (1 <= j <= M):
        raise ValueError(f"step index {j} outside 1..{M}")
    return j / M


def sprf(r: float | np.ndarray) -> np.ndarray:
    """Half-circle embedding of a progress rate: (sin pi*r, cos pi*r)."""
    r = np.asarray(r, dtype=np.float64)
    return np.stack([np.sin(np.pi * r), np.cos(np.pi * r)], axis=-1)


def l2_normalize(x: np.ndarray, axis: int = -1) -> np.ndarray:
    norm = np.linalg.norm(x, axis=axis, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("cannot normalize a zero vector")
    return x / norm


def augment(f_raw: np.ndarray, r) -> np.ndarray:
    """Normalize, append the progress feature, normalize again.

    Accepts a single vector with scalar r, or a (B, D) matrix with
    length-B rates.
    """
    f_raw = np.asarray(f_raw, dtype=np.float64)
    single = f_raw.ndim == 1
    if single:
        f_raw = f_raw[None, :]
    rates = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if rates.shape[0] != f_raw.shape[0]:
        raise ValueError("rate count does not match feature count")
    out = l2_normalize(np.concatenate([l2_normalize(f_raw, axis=1), sprf(rates)], axis=1), axis=1)
    return out[0] if single else out


@dataclass
class ProjectionHead:
    """Two affine layers with a relu in between; output is L2-normalized."""

    W1: np.ndarray  # (d_in, hidden)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden, d_out)
    b2: np.ndarray  # (d_out,)

    @classmethod
    def create(cls, d_in: int, d_out: int, hidden: int | None = None, rng=None) -> "ProjectionHead":
        if hidden is None:
            hidden = d_in
        rng = np.random.default_rng(rng)
        return cls(
            W1=rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, hidden)),
            b1=np.zeros(hidden),
            W2=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, d_out)),
            b2=np.zeros(d_out),
        )

    @property
    def d_in(self) -> int:
        return self.W1.shape[0]

    @property
    def d_out(self) -> int:
        return self.W2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


def project(head: ProjectionHead, x: np.ndarray) -> np.ndarray:
    """Map augmented features (rows) to unit vectors in the shared space."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != head.d_in:
        raise ValueError(f"input dim {x.shape[1]} != head d_in {head.d_in}")
    y = np.maximum(x @ head.W1 + head.b1, 0.0) @ head.W2 + head.b2
    out = l2_normalize(y, axis=1)
    return out[0] if single else out


def project_forward(head: ProjectionHead, x: np.ndarray):
    """Forward pass keeping the intermediates needed for the backward pass."""
    x = np.asarray(x, dtype=np.float64)
    a = x @ head.W1 + head.b1
    h = np.maximum(a, 0.0)
    y = h @ head.W2 + head.b2
    norm = np.linalg.norm(y, axis=1, keepdims=True)
    f = y / norm
    cache = (x, a, h, f, norm)
    return f, cache


def project_backward(head: ProjectionHead, cache, df: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. head parameters, given df = dL/df."""
    x, a, h, f, norm = cache
    dy = (df - (df * f).sum(axis=1, keepdims=True) * f) / norm
    dW2 = h.T @ dy
    db2 = dy.sum(axis=0)
    dh = dy @ head.W2.T
    da = dh * (a > 0)
    dW1 = x.T @ da
    db1 = da.sum(axis=0)
    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}
