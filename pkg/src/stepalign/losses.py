"""Contrastive losses over projected features, with analytic gradients.

Every loss returns its value together with exact partial derivatives with
respect to the projected features it consumed and the learnable scalars
(log-temperature per loss, raw variance of the step-distance target).
Backpropagation into the projection heads happens in the trainer, which
owns the feature forward passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TAU_INIT = 0.07
THETA_INIT = 1.0


def softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def softplus_inv(y: float) -> float:
    return float(np.log(np.expm1(y)))


def sigmoid(x: float) -> float:
    return float(1.0 / (1.0 + np.exp(-x)))


@dataclass
class LossParams:
    """Learnable scalars: one temperature per loss (log-space) and the
    positive variance of the intra-manual Gaussian target (softplus)."""

    log_tau_a: float
    log_tau_b: float
    log_tau_c: float
    raw_theta: float

    @classmethod
    def init(cls) -> "LossParams":
        lt = float(np.log(TAU_INIT))
        return cls(log_tau_a=lt, log_tau_b=lt, log_tau_c=lt, raw_theta=softplus_inv(THETA_INIT))

    @property
    def tau_a(self) -> float:
        return float(np.exp(self.log_tau_a))

    @property
    def tau_b(self) -> float:
        return float(np.exp(self.log_tau_b))

    @property
    def tau_c(self) -> float:
        return float(np.exp(self.log_tau_c))

    @property
    def theta(self) -> float:
        return softplus(self.raw_theta)

    def params(self) -> dict[str, float]:
        return {
            "log_tau_a": self.log_tau_a,
            "log_tau_b": self.log_tau_b,
            "log_tau_c": self.log_tau_c,
            "raw_theta": self.raw_theta,
        }


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def match_probs(S: np.ndarray, tau: float, direction: str) -> np.ndarray:
    """Temperature-scaled matching probabilities over a similarity block.

    V2I normalizes each video row over diagrams; I2V normalizes each
    diagram column over videos. Both are returned in the shape of S.
    """
    if tau <= 0:
        raise ValueError("temperature must be positive")
    if direction == "V2I":
        return _softmax_rows(S / tau)
    if direction == "I2V":
        return _softmax_rows(S.T / tau).T
    raise ValueError(f"unknown direction {direction!r}")


def _row_softmax_vjp(S: np.ndarray, tau: float, GP: np.ndarray):
    """Backward through P = softmax(S/tau, axis=1) given GP = dL/dP.

    Returns (P, dS, dlog_tau)."""
    Z = S / tau
    P = _softmax_rows(Z)
    dZ = P * (GP - (GP * P).sum(axis=1, keepdims=True))
    dS = dZ / tau
    dlog_tau = -float((dZ * Z).sum())
    return P, dS, dlog_tau


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (natural log); 0*log(0) taken as 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    m = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(p > 0, p * (np.log(p) - np.log(m)), 0.0)
        tq = np.where(q > 0, q * (np.log(q) - np.log(m)), 0.0)
    return float(0.5 * tp.sum() + 0.5 * tq.sum())


def _js_grads(P: np.ndarray, Q: np.ndarray):
    """Per-element dJS/dP and dJS/dQ for row-paired distributions.

    P must be strictly positive (softmax output); Q may contain zeros,
    in which case its gradient there is not consumed by any caller."""
    M = 0.5 * (P + Q)
    dP = 0.5 * (np.log(P) - np.log(M))
    with np.errstate(divide="ignore"):
        dQ = np.where(Q > 0, 0.5 * (np.log(np.maximum(Q, 1e-300)) - np.log(M)), 0.0)
    return dP, dQ


def info_nce(S: np.ndarray, tau: float) -> float:
    B = S.shape[0]
    Pv = match_probs(S, tau, "V2I")
    Pi = match_probs(S, tau, "I2V")
    d = np.arange(B)
    return float(-(np.log(Pv[d, d]).sum() + np.log(Pi[d, d]).sum()) / (2 * B))


def info_nce_loss(Fv: np.ndarray, Fi: np.ndarray, tau: float):
    """infoNCE on a pair batch; diagonal entries are the positives."""
    B = Fv.shape[0]
    S = Fv @ Fi.T
    d = np.arange(B)

    Pv = match_probs(S, tau, "V2I")
    GPv = np.zeros_like(S)
    GPv[d, d] = -1.0 / (2 * B * Pv[d, d])
    _, dS_v, dlt_v = _row_softmax_vjp(S, tau, GPv)

    Pi = match_probs(S, tau, "I2V")
    GPi = np.zeros_like(S)
    GPi[d, d] = -1.0 / (2 * B * Pi[d, d])
    _, dS_i_t, dlt_i = _row_softmax_vjp(S.T, tau, GPi.T)

    value = float(-(np.log(Pv[d, d]).sum() + np.log(Pi[d, d]).sum()) / (2 * B))
    dS = dS_v + dS_i_t.T
    return value, dS @ Fi, dS.T @ Fv, dlt_v + dlt_i


def cossim_loss(Fv: np.ndarray, Fi: np.ndarray):
    """Baseline: mean(1 - s_ii) over positive pairs."""
    B = Fv.shape[0]
    value = float(np.mean(1.0 - (Fv * Fi).sum(axis=1)))
    dFv = -Fi / B
    dFi = -Fv / B
    return value, dFv, dFi


def pair_match_matrix(diagram_ids) -> np.ndarray:
    """Q-support: entry (i, j) is 1 when pairs i and j share a diagram."""
    ids = np.asarray(diagram_ids, dtype=object)
    return (ids[:, None] == ids[None, :]).astype(np.float64)


def video_diagram_loss(Fv: np.ndarray, Fi: np.ndarray, diagram_ids, tau: float):
    """JS divergence between matching probabilities and ground-truth
    alignment distributions, symmetrized over both directions. Clips that
    share a diagram in the batch are mutual positives (uniform target)."""
    B = Fv.shape[0]
    S = Fv @ Fi.T
    Q = pair_match_matrix(diagram_ids)
    Q = Q / Q.sum(axis=1, keepdims=True)

    def one_direction(Srows, Qrows):
        P = _softmax_rows(Srows / tau)
        js = sum(js_divergence(P[i], Qrows[i]) for i in range(B)) / B
        dP, _ = _js_grads(P, Qrows)
        GP = dP / (2 * B)  # 1/2 direction weight, 1/B row mean
        _, dS, dlt = _row_softmax_vjp(Srows, tau, GP)
        return js, dS, dlt

    js_v, dS_v, dlt_v = one_direction(S, Q)
    js_i, dS_i, dlt_i = one_direction(S.T, Q.T)
    value = 0.5 * (js_v + js_i)
    dS = dS_v + dS_i.T
    return value, dS @ Fi, dS.T @ Fv, dlt_v + dlt_i


def video_manual_loss(Fv: np.ndarray, manual_feats: list[np.ndarray], manual_index, gt_position, tau: float):
    """Cross entropy of each clip against the diagrams of its own manual,
    weighted by manual length so longer assemblies dominate."""
    B = Fv.shape[0]
    sizes = np.array([manual_feats[m].shape[0] for m in manual_index], dtype=np.float64)
    wsum = sizes.sum()
    value = 0.0
    dFv = np.zeros_like(Fv)
    dFm = [np.zeros_like(F) for F in manual_feats]
    dlog_tau = 0.0
    for i in range(B):
        m = manual_index[i]
        F = manual_feats[m]
        g = gt_position[i] - 1
        w = sizes[i] / wsum
        s = (F @ Fv[i])[None, :]
        P, _, _ = _row_softmax_vjp(s, tau, np.zeros_like(s))
        value += -w * float(np.log(P[0, g]))
        GP = np.zeros_like(s)
        GP[0, g] = -w / P[0, g]
        _, ds, dlt = _row_softmax_vjp(s, tau, GP)
        dlog_tau += dlt
        dFv[i] += ds[0] @ F
        dFm[m] += np.outer(ds[0], Fv[i])
    return value, dFv, dFm, dlog_tau


def gaussian_step_target(j: int, M: int, theta: float) -> np.ndarray:
    """Discretized Gaussian over step indices 1..M, centered at j, with
    variance theta."""
    k = np.arange(1, M + 1, dtype=np.float64)
    w = np.exp(-((k - j) ** 2) / (2.0 * theta))
    return w / w.sum()


def intra_manual_loss(manual_feats: list[np.ndarray], manual_index, tau: float, theta: float):
    """Spread a manual's diagrams apart: each diagram's within-manual
    softmax should match a discretized Gaussian centered on its own step.

    Each batch clip contributes its manual weighted by manual length, so
    per clip the whole manual's JS terms enter with weight 1/sum(M_b)."""
    sizes = np.array([manual_feats[m].shape[0] for m in manual_index], dtype=np.float64)
    wsum = sizes.sum()
    counts: dict[int, int] = {}
    for m in manual_index:
        counts[m] = counts.get(m, 0) + 1

    value = 0.0
    dFm = [np.zeros_like(F) for F in manual_feats]
    dlog_tau = 0.0
    dtheta = 0.0
    for m, cnt in sorted(counts.items()):
        F = manual_feats[m]
        M = F.shape[0]
        weight = cnt / wsum  # cnt clips, each contributing (M/wsum) * (1/M)
        S = F @ F.T
        targets = np.stack([gaussian_step_target(j, M, theta) for j in range(1, M + 1)])
        P = _softmax_rows(S / tau)
        js = sum(js_divergence(P[j], targets[j]) for j in range(M))
        value += weight * js
        dP, dQ = _js_grads(P, targets)
        _, dS, dlt = _row_softmax_vjp(S, tau, weight * dP)
        dlog_tau += dlt
        dFm[m] += (dS + dS.T) @ F
        # target depends on theta through normalized Gaussian weights
        k = np.arange(1, M + 1, dtype=np.float64)
        for j in range(M):
            d2 = (k - (j + 1)) ** 2 / (2.0 * theta**2)
            q = targets[j]
            dq_dtheta = q * (d2 - float((q * d2).sum()))
            dtheta += weight * float((dQ[j] * dq_dtheta).sum())
    return value, dFm, dlog_tau, dtheta
