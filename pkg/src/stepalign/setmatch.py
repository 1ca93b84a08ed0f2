"""Whole-video to whole-manual alignment: similarity matrix, sharpened
cost matrix, entropy-regularized optimal transport via log-domain
Sinkhorn-Knopp, and monotone DTW."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EPSILON = 4.0
DEFAULT_ALPHA = 7


def similarity_matrix(video_feats: np.ndarray, diagram_feats: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; inputs are expected unit-normalized."""
    V = np.asarray(video_feats, dtype=np.float64)
    I = np.asarray(diagram_feats, dtype=np.float64)
    V = V / np.linalg.norm(V, axis=1, keepdims=True)
    I = I / np.linalg.norm(I, axis=1, keepdims=True)
    return V @ I.T


def cost_matrix(S: np.ndarray, alpha: int = DEFAULT_ALPHA):
    """Sharpen similarities into [0, 1]: (s^a - s_min^a) / (s_max^a - s_min^a).

    Odd alpha keeps the sign of negative similarities before
    normalization. A constant S is degenerate; all entries become 0.5.
    Returns (C, degenerate_flag)."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    S = np.asarray(S, dtype=np.float64)
    Sa = S**alpha
    lo, hi = Sa.min(), Sa.max()
    if hi - lo < 1e-15:
        return np.full_like(S, 0.5), True
    return (Sa - lo) / (hi - lo), False


@dataclass
class TransportPlan:
    T: np.ndarray
    converged: bool
    iterations: int
    marginal_violation: float


def sinkhorn(
    C: np.ndarray,
    epsilon: float,
    tol: float = 1e-9,
    max_iter: int = 10000,
    literal_objective: bool = False,
) -> TransportPlan:
    """Entropy-regularized transport between uniform marginals 1/N (rows,
    video side) and 1/M (columns, diagram side), solved in the log domain.

    By default the plan concentrates mass on high-C (similar) pairs,
    i.e. kernel exp(C / epsilon). `literal_objective` flips the sign to
    treat C as a cost to be minimized instead.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    C = np.asarray(C, dtype=np.float64)
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    N, M = C.shape
    K = (-C if literal_objective else C) / epsilon
    log_r = np.full(N, -np.log(N))
    log_c = np.full(M, -np.log(M))
    f = np.zeros(N)
    g = np.zeros(M)
    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        f = log_r - _logsumexp_rows(K + g[None, :])
        g = log_c - _logsumexp_rows((K + f[:, None]).T)
        T = np.exp(K + f[:, None] + g[None, :])
        violation = max(
            float(np.max(np.abs(T.sum(axis=1) - 1.0 / N))),
            float(np.max(np.abs(T.sum(axis=0) - 1.0 / M))),
        )
        if violation <= tol:
            return TransportPlan(T=T, converged=True, iterations=it, marginal_violation=violation)
    return TransportPlan(T=T, converged=False, iterations=it, marginal_violation=violation)


def _logsumexp_rows(A: np.ndarray) -> np.ndarray:
    m = A.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(A - m).sum(axis=1, keepdims=True)))[:, 0]


def plan_entropy(T: np.ndarray) -> float:
    T = np.asarray(T, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(T > 0, T * np.log(T), 0.0)
    return -float(terms.sum())


def dtw_align(S: np.ndarray) -> list[tuple[int, int]]:
    """Monotone path from (0,0) to (N-1,M-1) maximizing the summed
    similarity, with moves down, right and diagonal. Ties prefer the
    diagonal predecessor, then the one directly above (a down move)."""
    S = np.asarray(S, dtype=np.float64)
    N, M = S.shape
    D = np.full((N, M), -np.inf)
    move = np.zeros((N, M), dtype=np.int8)  # 0=start, 1=diag, 2=down, 3=right
    D[0, 0] = S[0, 0]
    for i in range(N):
        for j in range(M):
            if i == 0 and j == 0:
                continue
            best, arg = -np.inf, 0
            if i > 0 and j > 0 and D[i - 1, j - 1] > best:
                best, arg = D[i - 1, j - 1], 1
            if i > 0 and D[i - 1, j] > best:
                best, arg = D[i - 1, j], 2
            if j > 0 and D[i, j - 1] > best:
                best, arg = D[i, j - 1], 3
            D[i, j] = best + S[i, j]
            move[i, j] = arg
    path = [(N - 1, M - 1)]
    i, j = N - 1, M - 1
    while (i, j) != (0, 0):
        step = move[i, j]
        if step == 1:
            i, j = i - 1, j - 1
        elif step == 2:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return path


def dtw_score(S: np.ndarray, path) -> float:
    return float(sum(S[i, j] for i, j in path))


def plan_to_assignment(T: np.ndarray) -> np.ndarray:
    """Per row, the argmax column (0-based); ties go to the smaller index."""
    return np.argmax(np.asarray(T), axis=1)


def path_to_assignment(path, n_rows: int) -> np.ndarray:
    """Last column paired with each row along a DTW path (0-based)."""
    out = np.zeros(n_rows, dtype=int)
    for i, j in path:
        out[i] = j
    return out
