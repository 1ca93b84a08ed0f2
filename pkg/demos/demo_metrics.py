"""Retrieval metric behavior on hand-built queries: recall@k, the
rank-based AUROC, and how queries without any positive candidate pull
the aggregate AUROC below 0.5.

Run with:  python3 demos/demo_metrics.py
"""

import numpy as np

from stepalign.metrics import (
    RetrievalQuery,
    auroc,
    average_index_error,
    mean_auroc,
    recall_at_k,
    top1_accuracy,
)


def main():
    preds = [1, 1, 2, 4, 4]
    gts = [1, 2, 2, 3, 4]
    print(f"predictions  {preds}")
    print(f"ground truth {gts}")
    print(f"top-1 accuracy: {top1_accuracy(preds, gts):.1f}%")
    print(f"average index error: {average_index_error(preds, gts):.2f}")
    print()

    candidates = [f"step{j}" for j in range(5)]
    good = RetrievalQuery("clip-a", candidates, np.array([0.1, 0.9, 0.3, 0.2, 0.0]), {"step1"})
    poor = RetrievalQuery("clip-b", candidates, np.array([0.8, 0.1, 0.2, 0.3, 0.9]), {"step1"})
    for q in (good, poor):
        r1 = recall_at_k(q, 1)
        r3 = recall_at_k(q, 3)
        print(f"{q.query_id}: recall@1={r1} recall@3={r3} auroc={auroc(q):.2f}")
    print()

    print("Diagrams whose step never appears in any video form queries with")
    print("an empty positive set. Those queries score 0 by convention, so a")
    print("mix of them drags the aggregate AUROC below chance:")
    rng = np.random.default_rng(0)
    informative = [
        RetrievalQuery(f"q{i}", ["a", "b", "c"], rng.uniform(size=3), {"a"})
        for i in range(8)
    ]
    empty = [
        RetrievalQuery(f"e{i}", ["a", "b", "c"], rng.uniform(size=3), set())
        for i in range(8)
    ]
    print(f"  informative only : {mean_auroc(informative):.3f}")
    print(f"  with empty ones  : {mean_auroc(informative + empty):.3f}")


if __name__ == "__main__":
    main()
