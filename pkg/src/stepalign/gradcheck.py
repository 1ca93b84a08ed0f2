"""Finite-difference verification of the analytic gradients on random
small instances."""

from __future__ import annotations

import numpy as np

from .model import AlignmentModel, ManualInputs, PairInputs, total_loss_and_grads
from .optim import finite_difference_grads, max_relative_error

CHECK_LOSS_SETS = (
    ("infonce",),
    ("vi",),
    ("vm",),
    ("m",),
    ("infonce", "cossim", "vi", "vm", "m"),
)


def random_instance(seed: int, B: int = 4, d_raw: int = 8, d_out: int = 6):
    """A model plus random pair and manual batches with plausible structure."""
    rng = np.random.default_rng(seed)
    model = AlignmentModel.create(d_raw, d_out, seed=seed)
    diagram_ids = tuple(f"d{int(rng.integers(0, max(2, B - 1)))}" for _ in range(B))
    pair = PairInputs(
        video_raw=rng.normal(size=(B, d_raw)),
        video_rates=rng.uniform(0, 1, size=B),
        diagram_raw=rng.normal(size=(B, d_raw)),
        diagram_rates=rng.uniform(0, 1, size=B),
        diagram_ids=diagram_ids,
    )
    n_manuals = int(rng.integers(1, 3))
    sizes = [int(rng.integers(1, 5)) for _ in range(n_manuals)]
    manual = ManualInputs(
        video_raw=rng.normal(size=(B, d_raw)),
        video_rates=rng.uniform(0, 1, size=B),
        manual_raw=[rng.normal(size=(M, d_raw)) for M in sizes],
        manual_index=tuple(int(rng.integers(0, n_manuals)) for _ in range(B)),
        gt_position=(),  # filled below once manual_index is known
    )
    manual.gt_position = tuple(int(rng.integers(1, sizes[m] + 1)) for m in manual.manual_index)
    return model, pair, manual


def check_instance(seed: int, enabled, h: float = 1e-4, B: int = 4, d_raw: int = 8, d_out: int = 6) -> float:
    """Max relative error between analytic and central-difference grads."""
    model, pair, manual = random_instance(seed, B, d_raw, d_out)
    _, analytic = total_loss_and_grads(model, pair, manual, enabled)

    def value(params):
        model.set_params(params)
        breakdown, _ = total_loss_and_grads(model, pair, manual, enabled)
        return breakdown.total

    params = {k: np.array(v, dtype=np.float64) for k, v in model.params().items()}
    numeric = finite_difference_grads(value, params, h=h)
    model.set_params(params)
    return max_relative_error(analytic, numeric)


def run_gradcheck(seed: int = 0, n_instances: int = 4, tol: float = 1e-4):
    """Check every loss combination on several random instances.

    Returns a list of (loss_set, seed, max_rel_err, passed)."""
    results = []
    for enabled in CHECK_LOSS_SETS:
        for k in range(n_instances):
            err = check_instance(seed * 1000 + k, enabled)
            results.append(("+".join(enabled), seed * 1000 + k, err, err <= tol))
    return results
