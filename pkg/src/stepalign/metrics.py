"""Retrieval and alignment metrics: top-1 accuracy, average index error,
recall@k, AUROC, and the per-granularity evaluation report.

Pools are per manual: a segment retrieves among its own manual's
diagrams, a diagram retrieves among the test segments of videos that
assemble its manual. Diagram queries with no positive segment are kept in
the AUROC mean (contributing 0) and dropped from recall@k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def top1_accuracy(preds, gts) -> float:
    preds = np.asarray(preds)
    gts = np.asarray(gts)
    if preds.size == 0 or preds.shape != gts.shape:
        raise ValueError("predictions and ground truth must be non-empty and equal length")
    return 100.0 * float(np.mean(preds == gts))


def average_index_error(preds, gts) -> float:
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    if preds.size == 0 or preds.shape != gts.shape:
        raise ValueError("predictions and ground truth must be non-empty and equal length")
    return float(np.mean(np.abs(preds - gts)))


@dataclass
class RetrievalQuery:
    query_id: str
    candidate_ids: list[str]
    scores: np.ndarray
    positives: set[str] = field(default_factory=set)


def _ranked_ids(query: RetrievalQuery) -> list[str]:
    # ties broken lexicographically by candidate id
    order = sorted(range(len(query.candidate_ids)), key=lambda k: (-query.scores[k], query.candidate_ids[k]))
    return [query.candidate_ids[k] for k in order]


def recall_at_k(query: RetrievalQuery, k: int) -> int:
    if not query.candidate_ids:
        raise ValueError("empty candidate pool")
    if not query.positives:
        raise ValueError("recall@k undefined for a query with no positives")
    top = _ranked_ids(query)[:k]
    return int(any(c in query.positives for c in top))


def auroc(query: RetrievalQuery) -> float:
    """Probability a positive outscores a negative, ties counting half.

    A query with no positives scores 0 (not skipped), which is what drags
    aggregate AUROC below 0.5 when unmatched diagrams are in the query
    set. A query with no negatives scores 1."""
    if not query.candidate_ids:
        raise ValueError("empty candidate pool")
    pos_mask = np.array([c in query.positives for c in query.candidate_ids])
    n_pos = int(pos_mask.sum())
    n_neg = len(query.candidate_ids) - n_pos
    if n_pos == 0:
        return 0.0
    if n_neg == 0:
        return 1.0
    scores = np.asarray(query.scores, dtype=np.float64)
    pos = scores[pos_mask]
    neg = scores[~pos_mask]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins / (n_pos * n_neg))


def mean_auroc(queries) -> float:
    return float(np.mean([auroc(q) for q in queries]))


def mean_recall_at_k(queries, k: int) -> float:
    vals = [recall_at_k(q, k) for q in queries if q.positives]
    if not vals:
        return 0.0
    return 100.0 * float(np.mean(vals))


@dataclass
class GranularityReport:
    top1: float
    aie: float
    recall1: float
    recall3: float
    auroc_v2i: float
    auroc_i2v: float


@dataclass
class EvaluationReport:
    per_granularity: dict[str, GranularityReport]

    def rows(self):
        for gran, rep in self.per_granularity.items():
            yield gran, rep


def evaluate_predictions(
    preds: dict[str, int],
    gts: dict[str, int],
    v2i_queries: list[RetrievalQuery],
    i2v_queries: list[RetrievalQuery],
) -> GranularityReport:
    """Assemble one granularity's report from per-segment predictions and
    both retrieval query sets."""
    missing = sorted(set(gts) - set(preds))
    if missing:
        raise ValueError(f"missing predictions for segments: {missing[:5]}")
    keys = sorted(gts)
    p = [preds[k] for k in keys]
    g = [gts[k] for k in keys]
    return GranularityReport(
        top1=top1_accuracy(p, g),
        aie=average_index_error(p, g),
        recall1=mean_recall_at_k(i2v_queries, 1),
        recall3=mean_recall_at_k(i2v_queries, 3),
        auroc_v2i=mean_auroc(v2i_queries),
        auroc_i2v=mean_auroc(i2v_queries),
    )


def report_table(report: EvaluationReport) -> str:
    lines = [
        f"{'granularity':<12}{'Top-1':>8}{'AIE':>8}{'R@1':>8}{'R@3':>8}{'AUROC(V2I)':>12}{'AUROC(I2V)':>12}"
    ]
    for gran, rep in report.rows():
        lines.append(
            f"{gran:<12}{rep.top1:>8.2f}{rep.aie:>8.3f}{rep.recall1:>8.2f}"
            f"{rep.recall3:>8.2f}{rep.auroc_v2i:>12.4f}{rep.auroc_i2v:>12.4f}"
        )
    return "\n".join(lines)


def report_csv(report: EvaluationReport) -> str:
    lines = ["granularity,top1,aie,recall1,recall3,auroc_v2i,auroc_i2v"]
    for gran, rep in report.rows():
        lines.append(
            f"{gran},{rep.top1:.6f},{rep.aie:.6f},{rep.recall1:.6f},{rep.recall3:.6f},"
            f"{rep.auroc_v2i:.6f},{rep.auroc_i2v:.6f}"
        )
    return "\n".join(lines)
