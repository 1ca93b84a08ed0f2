"""Trainable state (two projection heads + loss scalars) and the combined
objective: forward over prepared batches, total loss, analytic gradients
for every parameter."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import ProjectionHead, augment, project_backward, project_forward
from .losses import (
    LossParams,
    cossim_loss,
    info_nce_loss,
    intra_manual_loss,
    sigmoid,
    video_diagram_loss,
    video_manual_loss,
)

LOSS_NAMES = ("infonce", "cossim", "vi", "vm", "m")


@dataclass
class AlignmentModel:
    video_head: ProjectionHead
    image_head: ProjectionHead
    loss_params: LossParams

    @classmethod
    def create(cls, d_raw: int, d_out: int = 1024, hidden: int | None = None, seed: int = 0) -> "AlignmentModel":
        rng = np.random.default_rng(seed)
        d_in = d_raw + 2  # raw feature + progress feature
        return cls(
            video_head=ProjectionHead.create(d_in, d_out, hidden, rng),
            image_head=ProjectionHead.create(d_in, d_out, hidden, rng),
            loss_params=LossParams.init(),
        )

    def params(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, head in (("video", self.video_head), ("image", self.image_head)):
            for name, arr in head.params().items():
                out[f"{prefix}/{name}"] = arr
        for name, value in self.loss_params.params().items():
            out[f"loss/{name}"] = np.array(value, dtype=np.float64)
        return out

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for prefix, head in (("video", self.video_head), ("image", self.image_head)):
            head.W1 = np.asarray(params[f"{prefix}/W1"], dtype=np.float64)
            head.b1 = np.asarray(params[f"{prefix}/b1"], dtype=np.float64)
            head.W2 = np.asarray(params[f"{prefix}/W2"], dtype=np.float64)
            head.b2 = np.asarray(params[f"{prefix}/b2"], dtype=np.float64)
        self.loss_params.log_tau_a = float(params["loss/log_tau_a"])
        self.loss_params.log_tau_b = float(params["loss/log_tau_b"])
        self.loss_params.log_tau_c = float(params["loss/log_tau_c"])
        self.loss_params.raw_theta = float(params["loss/raw_theta"])


@dataclass
class PairInputs:
    """Raw features and progress rates for a clip/diagram pair batch."""

    video_raw: np.ndarray  # (B, D_raw)
    video_rates: np.ndarray
    diagram_raw: np.ndarray  # (B, D_raw)
    diagram_rates: np.ndarray
    diagram_ids: tuple[str, ...]


@dataclass
class ManualInputs:
    """Raw features for a clip batch plus the full diagram list of each
    clip's manual (deduplicated)."""

    video_raw: np.ndarray
    video_rates: np.ndarray
    manual_raw: list[np.ndarray]  # per manual, (M, D_raw)
    manual_index: tuple[int, ...]
    gt_position: tuple[int, ...]


@dataclass
class LossBreakdown:
    total: float
    per_loss: dict[str, float] = field(default_factory=dict)


def _zero_like_params(model: AlignmentModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(np.asarray(arr, dtype=np.float64)) for name, arr in model.params().items()}


def total_loss_and_grads(
    model: AlignmentModel,
    pair: PairInputs | None,
    manual: ManualInputs | None,
    enabled: tuple[str, ...],
    weights: dict[str, float] | None = None,
):
    """Evaluate the enabled losses and backpropagate through the heads.

    Returns (LossBreakdown, grads) where grads mirrors model.params()."""
    enabled = tuple(enabled)
    unknown = set(enabled) - set(LOSS_NAMES)
    if unknown:
        raise ValueError(f"unknown losses {sorted(unknown)}")
    if not enabled:
        raise ValueError("no loss enabled")
    weights = weights or {}
    lp = model.loss_params
    grads = _zero_like_params(model)
    per_loss: dict[str, float] = {}
    total = 0.0

    def add_head_grads(prefix: str, head: ProjectionHead, cache, dF):
        hg = project_backward(head, cache, dF)
        for name, g in hg.items():
            grads[f"{prefix}/{name}"] += g

    pair_losses = [n for n in enabled if n in ("infonce", "cossim", "vi")]
    if pair_losses:
        if pair is None:
            raise ValueError("pair batch required for losses " + ",".join(pair_losses))
        Xv = augment(pair.video_raw, pair.video_rates)
        Xi = augment(pair.diagram_raw, pair.diagram_rates)
        Fv, cv = project_forward(model.video_head, Xv)
        Fi, ci = project_forward(model.image_head, Xi)
        dFv = np.zeros_like(Fv)
        dFi = np.zeros_like(Fi)
        for name in pair_losses:
            w = weights.get(name, 1.0)
            if name == "infonce":
                value, gv, gi, dlt = info_nce_loss(Fv, Fi, lp.tau_a)
                grads["loss/log_tau_a"] += w * dlt
            elif name == "cossim":
                value, gv, gi = cossim_loss(Fv, Fi)
            else:  # vi
                value, gv, gi, dlt = video_diagram_loss(Fv, Fi, pair.diagram_ids, lp.tau_a)
                grads["loss/log_tau_a"] += w * dlt
            per_loss[name] = value
            total += w * value
            dFv += w * gv
            dFi += w * gi
        add_head_grads("video", model.video_head, cv, dFv)
        add_head_grads("image", model.image_head, ci, dFi)

    manual_losses = [n for n in enabled if n in ("vm", "m")]
    if manual_losses:
        if manual is None:
            raise ValueError("manual batch required for losses " + ",".join(manual_losses))
        Xv = augment(manual.video_raw, manual.video_rates)
        Fv, cv = project_forward(model.video_head, Xv)
        manual_feats, manual_caches = [], []
        for raw in manual.manual_raw:
            M = raw.shape[0]
            rates = np.arange(1, M + 1) / M
            Xm = augment(raw, rates)
            Fm, cm = project_forward(model.image_head, Xm)
            manual_feats.append(Fm)
            manual_caches.append(cm)
        dFv = np.zeros_like(Fv)
        dFm = [np.zeros_like(F) for F in manual_feats]
        for name in manual_losses:
            w = weights.get(name, 1.0)
            if name == "vm":
                value, gv, gms, dlt = video_manual_loss(
                    Fv, manual_feats, manual.manual_index, manual.gt_position, lp.tau_b
                )
                grads["loss/log_tau_b"] += w * dlt
                dFv += w * gv
            else:  # m
                value, gms, dlt, dth = intra_manual_loss(
                    manual_feats, manual.manual_index, lp.tau_c, lp.theta
                )
                grads["loss/log_tau_c"] += w * dlt
                grads["loss/raw_theta"] += w * dth * sigmoid(lp.raw_theta)
            per_loss[name] = value
            total += w * value
            for m, g in enumerate(gms):
                dFm[m] += w * g
        add_head_grads("video", model.video_head, cv, dFv)
        for cm, g in zip(manual_caches, dFm):
            add_head_grads("image", model.image_head, cm, g)

    return LossBreakdown(total=total, per_loss=per_loss), grads


def loss_value(model: AlignmentModel, pair, manual, enabled, weights=None) -> float:
    """Forward-only total loss (used by the finite-difference checker)."""
    breakdown, _ = total_loss_and_grads(model, pair, manual, enabled, weights)
    return breakdown.total
