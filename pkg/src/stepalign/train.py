"""Training loop: seeded batch construction, AdamW steps, per-epoch
validation top-1 and best-checkpoint selection.

Config files are plain key=value text, overridable by CLI flags."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields

import numpy as np

from .checkpoint import save_checkpoint
from .data import Dataset, EmbeddingTable
from .inference import segment_raw_feature, top1_on_split
from .model import AlignmentModel, ManualInputs, PairInputs, total_loss_and_grads
from .optim import DEFAULT_LR, DEFAULT_WEIGHT_DECAY, AdamW
from .sampling import ManualBatch, PairBatch, build_manual_batch, build_pair_batch


@dataclass
class TrainConfig:
    losses: tuple[str, ...] = ("vi", "vm", "m")
    batch_size: int = 128
    epochs: int = 20
    lr: float = DEFAULT_LR
    weight_decay: float = DEFAULT_WEIGHT_DECAY
    seed: int = 0
    granularity: str = "step"
    d_out: int = 1024
    hidden: int | None = None

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        values = {}
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict[str, str]) -> "TrainConfig":
        cfg = cls()
        casts = {f.name: f.type for f in fields(cls)}
        for key, value in values.items():
            if key not in casts:
                raise ValueError(f"unknown config key {key!r}")
            if key == "losses":
                cfg.losses = tuple(v for v in value.replace(",", " ").split() if v)
            elif key in ("batch_size", "epochs", "seed", "d_out"):
                setattr(cfg, key, int(value))
            elif key == "hidden":
                cfg.hidden = None if value in ("", "none") else int(value)
            elif key in ("lr", "weight_decay"):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        return cfg

    def to_dict(self) -> dict:
        return {
            "losses": ",".join(self.losses),
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "lr": self.lr,
            "weight_decay": self.weight_decay,
            "seed": self.seed,
            "granularity": self.granularity,
            "d_out": self.d_out,
            "hidden": self.hidden,
        }


def pair_inputs(batch: PairBatch, diagram_table: EmbeddingTable, clip_table: EmbeddingTable) -> PairInputs:
    video_raw = np.stack([segment_raw_feature(clip_table, sid) for sid in batch.segment_ids])
    diagram_raw = np.stack([diagram_table[d] for d in batch.diagram_ids])
    return PairInputs(
        video_raw=video_raw,
        video_rates=batch.rates_video,
        diagram_raw=diagram_raw,
        diagram_rates=batch.rates_diagram,
        diagram_ids=batch.diagram_ids,
    )


def manual_inputs(batch: ManualBatch, diagram_table: EmbeddingTable, clip_table: EmbeddingTable) -> ManualInputs:
    video_raw = np.stack([segment_raw_feature(clip_table, sid) for sid in batch.segment_ids])
    manual_raw = [np.stack([diagram_table[d] for d in ids]) for ids in batch.manuals]
    return ManualInputs(
        video_raw=video_raw,
        video_rates=batch.rates_video,
        manual_raw=manual_raw,
        manual_index=batch.manual_index,
        gt_position=batch.gt_position,
    )


@dataclass
class TrainResult:
    best_epoch: int
    best_val_top1: float
    history: list[dict] = field(default_factory=list)


def train(
    cfg: TrainConfig,
    ds: Dataset,
    diagram_table: EmbeddingTable,
    clip_table: EmbeddingTable,
    checkpoint_path,
    log_path=None,
    model: AlignmentModel | None = None,
    batches_per_epoch: int | None = None,
) -> TrainResult:
    needs_pair = any(l in cfg.losses for l in ("infonce", "cossim", "vi"))
    needs_manual = any(l in cfg.losses for l in ("vm", "m"))
    if not (needs_pair or needs_manual):
        raise ValueError("no loss enabled")

    if model is None:
        model = AlignmentModel.create(diagram_table.dim, cfg.d_out, cfg.hidden, seed=cfg.seed)
    n_labeled = len(ds.labeled_segments("train", cfg.granularity))
    if n_labeled == 0:
        raise ValueError("no labeled training segments")
    if batches_per_epoch is None:
        batches_per_epoch = max(1, n_labeled // cfg.batch_size)

    opt = AdamW(lr=cfg.lr, weight_decay=cfg.weight_decay,
                no_decay={"loss/log_tau_a", "loss/log_tau_b", "loss/log_tau_c", "loss/raw_theta"})
    history = []
    best_epoch, best_top1 = 0, -1.0
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        epoch_losses: dict[str, float] = {}
        for _ in range(batches_per_epoch):
            step += 1
            batch_seed = cfg.seed * 1_000_003 + step
            pair = None
            man = None
            if needs_pair:
                pb = build_pair_batch(ds, cfg.batch_size, batch_seed, cfg.granularity)
                pair = pair_inputs(pb, diagram_table, clip_table)
            if needs_manual:
                mb = build_manual_batch(ds, cfg.batch_size, batch_seed + 1, cfg.granularity)
                man = manual_inputs(mb, diagram_table, clip_table)
            breakdown, grads = total_loss_and_grads(model, pair, man, cfg.losses)
            params = opt.step(model.params(), grads)
            model.set_params(params)
            for name, value in breakdown.per_loss.items():
                epoch_losses[name] = epoch_losses.get(name, 0.0) + value / batches_per_epoch
        val_top1 = top1_on_split(model, ds, diagram_table, clip_table, "val", cfg.granularity)
        row = {"epoch": epoch, **{f"loss_{k}": v for k, v in sorted(epoch_losses.items())}, "val_top1": val_top1}
        history.append(row)
        if val_top1 > best_top1:
            best_epoch, best_top1 = epoch, val_top1
            save_checkpoint(model, checkpoint_path)

    if log_path is not None:
        keys = ["epoch"] + sorted({k for row in history for k in row if k != "epoch"})
        with open(log_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=keys)
            writer.writeheader()
            writer.writerows(history)
    return TrainResult(best_epoch=best_epoch, best_val_top1=best_top1, history=history)
