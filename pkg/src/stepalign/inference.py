"""Feature projection over a dataset, per-video alignment, retrieval
query construction and the full evaluation run."""

from __future__ import annotations

import numpy as np

from .data import Dataset, EmbeddingTable, Manual, VideoRecord, segment_embedding_ids
from .features import augment
from .metrics import EvaluationReport, GranularityReport, RetrievalQuery, evaluate_predictions
from .model import AlignmentModel
from .setmatch import (
    DEFAULT_ALPHA,
    DEFAULT_EPSILON,
    cost_matrix,
    dtw_align,
    path_to_assignment,
    plan_to_assignment,
    similarity_matrix,
    sinkhorn,
)
from .features import project


def segment_raw_feature(clip_table: EmbeddingTable, segment_id: str) -> np.ndarray:
    """Raw feature of a segment: its single entry, or the mean of its
    per-clip entries (test-time five-clip averaging)."""
    ids = segment_embedding_ids(clip_table, segment_id)
    if not ids:
        raise KeyError(f"no embedding for segment {segment_id!r}")
    return np.mean([clip_table[k] for k in ids], axis=0)


def manual_diagrams(manual: Manual, granularity: str):
    return manual.steps if granularity == "step" else manual.pages


def project_manual(model: AlignmentModel, manual: Manual, diagram_table: EmbeddingTable, granularity: str):
    diagrams = manual_diagrams(manual, granularity)
    M = len(diagrams)
    raw = np.stack([diagram_table[d.diagram_id] for d in diagrams])
    rates = np.arange(1, M + 1) / M
    feats = project(model.image_head, augment(raw, rates))
    return [d.diagram_id for d in diagrams], feats


def project_video_segments(model: AlignmentModel, video: VideoRecord, clip_table: EmbeddingTable):
    seg_ids = [s.segment_id for s in video.segments]
    raw = np.stack([segment_raw_feature(clip_table, sid) for sid in seg_ids])
    rates = np.array([(s.t_start + s.t_end) / (2.0 * video.duration) for s in video.segments])
    feats = project(model.video_head, augment(raw, rates))
    return seg_ids, feats


def video_similarity(model, video, manual, diagram_table, clip_table, granularity="step"):
    seg_ids, Fv = project_video_segments(model, video, clip_table)
    diag_ids, Fi = project_manual(model, manual, diagram_table, granularity)
    return seg_ids, diag_ids, similarity_matrix(Fv, Fi)


def assign(S: np.ndarray, method: str, epsilon: float = DEFAULT_EPSILON, alpha: int = DEFAULT_ALPHA):
    """Per-segment predicted diagram index (1-based) under a method.

    Returns (assignment, transport_plan_or_None)."""
    if method == "raw":
        return plan_to_assignment(S) + 1, None
    if method == "ot":
        C, _ = cost_matrix(S, alpha)
        plan = sinkhorn(C, epsilon)
        return plan_to_assignment(plan.T) + 1, plan
    if method == "dtw":
        path = dtw_align(S)
        return path_to_assignment(path, S.shape[0]) + 1, None
    raise ValueError(f"unknown method {method!r}")


def predict_split(
    model: AlignmentModel,
    ds: Dataset,
    diagram_table: EmbeddingTable,
    clip_table: EmbeddingTable,
    split: str = "test",
    granularity: str = "step",
    method: str = "raw",
    epsilon: float = DEFAULT_EPSILON,
    alpha: int = DEFAULT_ALPHA,
):
    """Predictions, ground truth, and similarity rows for one split.

    Returns (preds, gts, per_video) where per_video maps video_id to
    (segment_ids, diagram_ids, S, T)."""
    preds: dict[str, int] = {}
    gts: dict[str, int] = {}
    per_video = {}
    for video in ds.videos_in_split(split):
        manual = ds.manuals[video.manual_id]
        if not video.segments:
            continue
        seg_ids, diag_ids, S = video_similarity(model, video, manual, diagram_table, clip_table, granularity)
        js, plan = assign(S, method, epsilon, alpha)
        per_video[video.video_id] = (seg_ids, diag_ids, S, None if plan is None else plan.T)
        for seg, sid, j in zip(video.segments, seg_ids, js):
            gt = seg.gt_step_index if granularity == "step" else seg.gt_page_index
            preds[sid] = int(j)
            if gt is not None:
                gts[sid] = int(gt)
    return preds, gts, per_video


def build_queries(ds: Dataset, per_video, split: str, granularity: str):
    """V2I queries (one per labeled segment, pool = own manual's diagrams)
    and I2V queries (one per diagram, pool = the split's segments of
    videos assembling that manual, unlabeled segments included)."""
    v2i: list[RetrievalQuery] = []
    i2v: list[RetrievalQuery] = []
    by_manual: dict[str, list[str]] = {}
    for video in ds.videos_in_split(split):
        by_manual.setdefault(video.manual_id, []).append(video.video_id)

    for mid, vids in sorted(by_manual.items()):
        manual = ds.manuals[mid]
        diagrams = manual_diagrams(manual, granularity)
        # columns of the per-video similarity matrices give the I2V scores
        seg_pool: list[str] = []
        scores_by_diag: dict[str, list[float]] = {d.diagram_id: [] for d in diagrams}
        positives_by_diag: dict[str, set[str]] = {d.diagram_id: set() for d in diagrams}
        for vid in vids:
            if vid not in per_video:
                continue
            seg_ids, diag_ids, S, _ = per_video[vid]
            video = ds.videos[vid]
            for row, (seg, sid) in enumerate(zip(video.segments, seg_ids)):
                gt = seg.gt_step_index if granularity == "step" else seg.gt_page_index
                v2i.append(
                    RetrievalQuery(
                        query_id=sid,
                        candidate_ids=list(diag_ids),
                        scores=S[row].copy(),
                        positives={diag_ids[gt - 1]} if gt is not None else set(),
                    )
                )
                seg_pool.append(sid)
                for col, did in enumerate(diag_ids):
                    scores_by_diag[did].append(float(S[row, col]))
                if gt is not None:
                    positives_by_diag[diag_ids[gt - 1]].add(sid)
        if not seg_pool:
            continue
        for did in scores_by_diag:
            i2v.append(
                RetrievalQuery(
                    query_id=did,
                    candidate_ids=list(seg_pool),
                    scores=np.array(scores_by_diag[did]),
                    positives=positives_by_diag[did],
                )
            )
    # V2I recall/auroc only over labeled queries for recall; auroc keeps all
    v2i = [q for q in v2i if q.positives]
    return v2i, i2v


def evaluate_run(
    model: AlignmentModel,
    ds: Dataset,
    diagram_table: EmbeddingTable,
    clip_table: EmbeddingTable,
    split: str = "test",
    granularities=("step", "page"),
    method: str = "raw",
    epsilon: float = DEFAULT_EPSILON,
    alpha: int = DEFAULT_ALPHA,
) -> EvaluationReport:
    per_gran: dict[str, GranularityReport] = {}
    for gran in granularities:
        preds, gts, per_video = predict_split(
            model, ds, diagram_table, clip_table, split, gran, method, epsilon, alpha
        )
        v2i, i2v = build_queries(ds, per_video, split, gran)
        per_gran[gran] = evaluate_predictions(preds, gts, v2i, i2v)
    return EvaluationReport(per_granularity=per_gran)


def top1_on_split(model, ds, diagram_table, clip_table, split="val", granularity="step", method="raw") -> float:
    preds, gts, _ = predict_split(model, ds, diagram_table, clip_table, split, granularity, method)
    if not gts:
        return 0.0
    correct = sum(1 for k, g in gts.items() if preds[k] == g)
    return 100.0 * correct / len(gts)


def retrieve(
    model: AlignmentModel,
    ds: Dataset,
    diagram_table: EmbeddingTable,
    clip_table: EmbeddingTable,
    query_id: str,
    direction: str,
    k: int,
    split: str = "test",
    granularity: str = "step",
):
    """Top-k candidates for a single query id, with scores."""
    _, _, per_video = predict_split(model, ds, diagram_table, clip_table, split, granularity, "raw")
    v2i, i2v_all = build_queries(ds, per_video, split, granularity)
    # rebuild unlabeled-inclusive V2I list for lookup
    queries = {q.query_id: q for q in (v2i if direction == "V2I" else i2v_all)}
    if query_id not in queries:
        raise KeyError(f"unknown query id {query_id!r} for direction {direction}")
    q = queries[query_id]
    order = sorted(range(len(q.candidate_ids)), key=lambda i: (-q.scores[i], q.candidate_ids[i]))
    truncated = k > len(order)
    return [(q.candidate_ids[i], float(q.scores[i])) for i in order[:k]], truncated
