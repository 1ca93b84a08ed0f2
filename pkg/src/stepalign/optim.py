"""AdamW over a flat name -> array parameter dict, plus finite-difference
gradient checking."""

from __future__ import annotations

import numpy as np

DEFAULT_LR = 5e-4
DEFAULT_WEIGHT_DECAY = 5e-3


class AdamW:
    """Decoupled weight decay Adam. Parameters whose names appear in
    `no_decay` (the loss scalars) are exempt from decay."""

    def __init__(self, lr=DEFAULT_LR, weight_decay=DEFAULT_WEIGHT_DECAY,
                 betas=(0.9, 0.999), eps=1e-8, no_decay=()):
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.no_decay = set(no_decay)
        self.step_count = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        out = {}
        for name, p in params.items():
            g = np.asarray(grads[name], dtype=np.float64)
            p = np.asarray(p, dtype=np.float64)
            if name not in self.m:
                self.m[name] = np.zeros_like(p)
                self.v[name] = np.zeros_like(p)
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            new = p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay and name not in self.no_decay:
                new = new - self.lr * self.weight_decay * p
            out[name] = new
        return out


def finite_difference_grads(fn, params: dict[str, np.ndarray], h: float = 1e-4) -> dict[str, np.ndarray]:
    """Central finite differences of a scalar function of the params."""
    grads = {}
    for name, p in params.items():
        p = np.asarray(p, dtype=np.float64)
        g = np.zeros_like(p, dtype=np.float64)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for k in range(flat_p.size):
            orig = flat_p[k]
            flat_p[k] = orig + h
            fp = fn(params)
            flat_p[k] = orig - h
            fm = fn(params)
            flat_p[k] = orig
            flat_g[k] = (fp - fm) / (2 * h)
        grads[name] = g
    return grads


def max_relative_error(analytic: dict[str, np.ndarray], numeric: dict[str, np.ndarray],
                       floor: float = 1e-3) -> float:
    """max |a - n| / max(|a|, |n|, floor) over all parameter entries.

    The floor guards entries whose gradient magnitude is below the
    truncation noise of central differences at h=1e-4; those are
    effectively checked absolutely at floor * tol precision."""
    worst = 0.0
    for name, a in analytic.items():
        n = numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(np.asarray(a) - np.asarray(n)) / denom)))
    return worst
