"""Batch feature export: runs image and video backbones over diagrams
and clip windows and writes the binary embedding files consumed by the
alignment library."""

__version__ = "0.1.0"

from .emb import read_emb, write_emb
from .jobs import ExtractJob, extract_clip_embeddings, extract_diagram_embeddings

__all__ = [
    "ExtractJob",
    "extract_clip_embeddings",
    "extract_diagram_embeddings",
    "read_emb",
    "write_emb",
]
