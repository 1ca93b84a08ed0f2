"""Model checkpoints in the `.emb` container.

Every tensor is stored flattened as one entry whose id carries its name
and shape ("video/W1 34 34"); entries are padded with zeros to a common
dimension since the container mandates uniform dim. Loss scalars are
entries of the same form with shape ().
"""

from __future__ import annotations

import numpy as np

from .data import EmbeddingTable, read_embedding_table, write_embedding_table
from .features import ProjectionHead
from .losses import LossParams
from .model import AlignmentModel


def save_checkpoint(model: AlignmentModel, path) -> None:
    tensors = model.params()
    flat = {name: np.asarray(t, dtype=np.float64).reshape(-1) for name, t in tensors.items()}
    dim = max(v.size for v in flat.values())
    entries = {}
    for name, t in tensors.items():
        shape = " ".join(str(s) for s in np.asarray(t).shape)
        key = f"{name} {shape}".rstrip()
        vec = np.zeros(dim, dtype=np.float32)
        vec[: flat[name].size] = flat[name].astype(np.float32)
        entries[key] = vec
    write_embedding_table(EmbeddingTable(dim, entries), path)


def load_checkpoint(path) -> AlignmentModel:
    table = read_embedding_table(path)
    tensors: dict[str, np.ndarray] = {}
    for key, vec in table.entries.items():
        parts = key.split(" ")
        name = parts[0]
        shape = tuple(int(s) for s in parts[1:])
        n = int(np.prod(shape)) if shape else 1
        arr = np.asarray(vec[:n], dtype=np.float64).reshape(shape)
        tensors[name] = arr

    def head(prefix: str) -> ProjectionHead:
        return ProjectionHead(
            W1=tensors[f"{prefix}/W1"],
            b1=tensors[f"{prefix}/b1"],
            W2=tensors[f"{prefix}/W2"],
            b2=tensors[f"{prefix}/b2"],
        )

    lp = LossParams(
        log_tau_a=float(tensors["loss/log_tau_a"]),
        log_tau_b=float(tensors["loss/log_tau_b"]),
        log_tau_c=float(tensors["loss/log_tau_c"]),
        raw_theta=float(tensors["loss/raw_theta"]),
    )
    return AlignmentModel(video_head=head("video"), image_head=head("image"), loss_params=lp)
