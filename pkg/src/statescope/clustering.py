"""Unsupervised clustering (k-means, DBSCAN, GMM) and truth-aligned scoring.

All three algorithms are deterministic given the seed and the input set:
k-means seeds its initialization after canonically ordering the points, so
permuting the input only permutes the labels. Evaluation aligns cluster ids
to ground-truth labels with an optimal one-to-one assignment before
computing the confusion matrix and macro precision/recall/F1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import KExceedsN, LengthMismatch, SingularCovariance, TooFewPoints

NOISE = -1


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    labels: np.ndarray  # int, NOISE = -1 (DBSCAN only)
    k: int
    algorithm: str  # kmeans | dbscan | gmm
    quality: float  # inertia | unused | log-likelihood
    quality_history: tuple[float, ...] = ()  # per-iteration, where meaningful


@dataclass(frozen=True, eq=False)
class GmmResult:
    assignment: ClusterAssignment
    responsibilities: np.ndarray  # (N, k), rows sum to 1
    means: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True, eq=False)
class EvalReport:
    confusion: np.ndarray  # k_true x k_pred counts (noise column last if present)
    true_classes: tuple
    pred_classes: tuple  # cluster ids, NOISE last if present
    precision: float
    recall: float
    f1: float
    accuracy: float
    mapping: dict  # cluster id -> true class

    def to_doc(self) -> dict:
        return {
            "confusion": self.confusion.tolist(),
            "true_classes": [str(c) for c in self.true_classes],
            "pred_classes": [int(c) if isinstance(c, (int, np.integer)) else str(c) for c in self.pred_classes],
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "mapping": {str(k): str(v) for k, v in self.mapping.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, indent=1) + "\n"

    def format_confusion(self) -> str:
        """Aligned text table, true classes as rows, clusters as columns."""
        col_headers = [str(c) for c in self.pred_classes]
        row_headers = [str(c) for c in self.true_classes]
        width = max([len(h) for h in col_headers + row_headers] + [6])
        lines = [" " * width + " " + " ".join(h.rjust(width) for h in col_headers)]
        for name, row in zip(row_headers, self.confusion):
            lines.append(name.rjust(width) + " " + " ".join(str(int(v)).rjust(width) for v in row))
        return "\n".join(lines)


def _canonical_order(points: np.ndarray) -> np.ndarray:
    return np.lexsort(points.T[::-1])


def _kpp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = np.sum((x - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)
        centroids[j] = x[idx]
        np.minimum(closest, np.sum((x - centroids[j]) ** 2, axis=1), out=closest)
    return centroids


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6) -> ClusterAssignment:
    """Lloyd iterations from a k-means++ start; empty clusters are reseeded
    to the point currently farthest from its centroid."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise KExceedsN(f"need 1 <= k <= n, got k={k}, n={n}")

    order = _canonical_order(x)
    xc = x[order]
    rng = np.random.default_rng(seed)
    centroids = _kpp_init(xc, k, rng)

    history: list[float] = []
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d2 = np.sum((xc[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        inertia = float(d2[np.arange(n), labels].sum())
        history.append(inertia)
        if len(history) > 1 and history[-2] - inertia <= tol * max(history[-2], 1e-300):
            break
        new_centroids = centroids.copy()
        for j in range(k):
            members = labels == j
            if members.any():
                new_centroids[j] = xc[members].mean(axis=0)
        empties = [j for j in range(k) if not (labels == j).any()]
        if empties:
            dist_to_own = d2[np.arange(n), labels].copy()
            for j in empties:
                far = int(np.argmax(dist_to_own))
                new_centroids[j] = xc[far]
                dist_to_own[far] = -1.0
        centroids = new_centroids

    out = np.empty(n, dtype=int)
    out[order] = labels
    return ClusterAssignment(labels=out, k=k, algorithm="kmeans",
                             quality=history[-1], quality_history=tuple(history))


def dbscan(points, eps: float, min_pts: int) -> ClusterAssignment:
    """Classic density reachability; labels follow discovery order."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    d = np.sqrt(np.maximum(_sq_dists(x), 0.0))
    neighbor = d <= eps
    core = neighbor.sum(axis=1) >= min_pts

    labels = np.full(n, NOISE, dtype=int)
    visited = np.zeros(n, dtype=bool)
    cid = 0
    for i in range(n):
        if visited[i] or not core[i]:
            continue
        visited[i] = True
        labels[i] = cid
        queue = list(np.flatnonzero(neighbor[i]))
        qi = 0
        while qi < len(queue):
            j = queue[qi]
            qi += 1
            if labels[j] == NOISE:
                labels[j] = cid
            if visited[j]:
                continue
            visited[j] = True
            if core[j]:
                queue.extend(np.flatnonzero(neighbor[j]))
        cid += 1
    return ClusterAssignment(labels=labels, k=cid, algorithm="dbscan", quality=float("nan"))


def _sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    out = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(out, 0.0)
    return out


def auto_eps(points, min_pts: int = 4) -> float:
    """Pick eps from the sorted min_pts-th nearest-neighbor distances.

    The elbow is the maximum discrete curvature of the sorted curve; a flat
    curve falls back to the 90th percentile.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n = x.shape[0]
    if n <= min_pts:
        raise TooFewPoints(f"auto_eps needs more than min_pts={min_pts} points, got {n}")
    d = np.sqrt(np.maximum(_sq_dists(x), 0.0))
    d.sort(axis=1)
    kdist = np.sort(d[:, min_pts])
    spread = kdist[-1] - kdist[0]
    flat = spread <= 1e-12 * max(1.0, float(kdist[-1]))
    if not flat and kdist.size >= 3:
        curvature = kdist[2:] - 2.0 * kdist[1:-1] + kdist[:-2]
        if curvature.max() <= 1e-12 * max(1.0, float(kdist[-1])):
            flat = True
        else:
            eps = float(kdist[int(np.argmax(curvature)) + 1])
            if eps > 0:
                return eps
            flat = True
    return max(float(np.percentile(kdist, 90)), 1e-12)


def gmm(points, k: int, seed: int = 0, max_iter: int = 200, tol: float = 1e-8,
        reg: float = 1e-6) -> GmmResult:
    """Full-covariance EM initialized from k-means; log-likelihood history
    is recorded per iteration and is non-decreasing up to round-off."""
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    n, dim = x.shape
    if not 1 <= k <= n:
        raise KExceedsN(f"need 1 <= k <= n, got k={k}, n={n}")

    init = kmeans(x, k, seed=seed)
    means = np.empty((k, dim))
    covs = np.empty((k, dim, dim))
    weights = np.empty(k)
    for j in range(k):
        members = x[init.labels == j]
        if len(members) == 0:
            members = x
        means[j] = members.mean(axis=0)
        covs[j] = _regularized_cov(members, means[j], reg)
        weights[j] = max(len(members), 1) / n
    weights /= weights.sum()

    history: list[float] = []
    resp = np.full((n, k), 1.0 / k)
    for _ in range(max_iter):
        log_prob = np.empty((n, k))
        for j in range(k):
            log_prob[:, j] = np.log(weights[j]) + _mvn_logpdf(x, means[j], covs[j], reg)
        row_norm = logsumexp(log_prob, axis=1)
        ll = float(row_norm.sum())
        resp = np.exp(log_prob - row_norm[:, None])
        resp /= resp.sum(axis=1, keepdims=True)
        history.append(ll)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= tol:
            break
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-300)
        weights = nk / n
        means = (resp.T @ x) / nk[:, None]
        for j in range(k):
            diff = x - means[j]
            covs[j] = (resp[:, j][:, None] * diff).T @ diff / nk[j] + reg * np.eye(dim)

    labels = np.argmax(resp, axis=1).astype(int)
    assignment = ClusterAssignment(labels=labels, k=k, algorithm="gmm",
                                   quality=history[-1], quality_history=tuple(history))
    return GmmResult(assignment=assignment, responsibilities=resp,
                     means=means, covariances=covs, weights=weights)


def _regularized_cov(members: np.ndarray, mean: np.ndarray, reg: float) -> np.ndarray:
    diff = members - mean
    return diff.T @ diff / len(members) + reg * np.eye(members.shape[1])


def _mvn_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray, reg: float) -> np.ndarray:
    dim = x.shape[1]
    chol = None
    bump = reg
    for _ in range(8):
        try:
            chol = np.linalg.cholesky(cov + (bump - reg) * np.eye(dim) if bump > reg else cov)
            break
        except np.linalg.LinAlgError:
            bump *= 10.0
    if chol is None:
        raise SingularCovariance("covariance not positive definite after regularization")
    diff = x - mean
    z = solve_triangular(chol, diff.T, lower=True).T
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (dim * np.log(2.0 * np.pi) + logdet + np.sum(z * z, axis=1))


def evaluate(pred_labels, true_labels) -> EvalReport:
    """Score a clustering against ground truth.

    Clusters are matched one-to-one to true classes by maximizing the
    matched count (optimal assignment), so any relabeling of the clusters
    scores identically. Noise points (-1) always count as errors.
    """
    pred = np.asarray(pred_labels)
    true = np.asarray(true_labels)
    if pred.shape[0] != true.shape[0]:
        raise LengthMismatch(f"pred has {pred.shape[0]} labels, true has {true.shape[0]}")
    n = pred.shape[0]
    true_classes = sorted(set(true.tolist()), key=str)
    pred_nonnoise = sorted({int(c) for c in pred.tolist() if c != NOISE})
    has_noise = bool((pred == NOISE).any())
    pred_classes = pred_nonnoise + ([NOISE] if has_noise else [])

    t_idx = {c: i for i, c in enumerate(true_classes)}
    p_idx = {c: i for i, c in enumerate(pred_classes)}
    confusion = np.zeros((len(true_classes), len(pred_classes)), dtype=int)
    for t, p in zip(true.tolist(), pred.tolist()):
        confusion[t_idx[t], p_idx[int(p)]] += 1

    mapping: dict[int, object] = {}
    matched = 0
    if pred_nonnoise:
        sub = confusion[:, : len(pred_nonnoise)]
        rows, cols = linear_sum_assignment(-sub)
        for r, c in zip(rows, cols):
            mapping[pred_nonnoise[c]] = true_classes[r]
            matched += int(sub[r, c])
    accuracy = matched / n if n else 0.0

    precisions, recalls = [], []
    inv = {v: k for k, v in mapping.items()}
    for t in true_classes:
        if t in inv:
            c = inv[t]
            hit = confusion[t_idx[t], p_idx[c]]
            col = confusion[:, p_idx[c]].sum()
            row = confusion[t_idx[t], :].sum()
            precisions.append(hit / col if col else 0.0)
            recalls.append(hit / row if row else 0.0)
        else:
            precisions.append(0.0)
            recalls.append(0.0)
    precision = float(np.mean(precisions)) if precisions else 0.0
    recall = float(np.mean(recalls)) if recalls else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        confusion=confusion,
        true_classes=tuple(true_classes),
        pred_classes=tuple(pred_classes),
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        mapping=mapping,
    )
