"""Exact O(N^2) t-SNE used to project 27-dim feature vectors to 2-D.

The 2-D coordinates feed both the clustering step and the scatter view.
Perplexity calibration binary-searches each conditional kernel width so the
Shannon entropy (base 2) of the row matches log2(perplexity); the optimizer
is plain gradient descent with early exaggeration and momentum. Out-of-
sample points are never embedded; live classification happens in the
feature space instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFinite, TooFewPoints

_EPS = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0  # clamped to (N-1)/3 at run time
    n_iter: int = 1000
    exaggeration_factor: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.perplexity < 2:
            raise TooFewPoints("perplexity must be >= 2")
        if self.n_iter < 250:
            raise TooFewPoints("n_iter must be >= 250")


@dataclass(frozen=True, eq=False)
class Embedding:
    points: np.ndarray  # (N, 2)
    kl_initial: float
    kl_final: float


def _entropy_and_probs(sq_dists: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Base-2 entropy and probabilities of exp(-beta * d), computed stably."""
    shifted = sq_dists - sq_dists.min()
    w = np.exp(-beta * shifted)
    total = w.sum()
    p = w / total
    # H = log2(total) + beta * E[d_shifted] / ln 2
    h = np.log2(total) + beta * float(np.dot(p, shifted)) / np.log(2.0)
    return h, p


def calibrate_row(
    distances_row, perplexity: float, tol: float = 1e-4, max_steps: int = 200
) -> tuple[float, np.ndarray]:
    """Binary-search the Gaussian width for one row of squared distances.

    Returns (sigma, probabilities); the probabilities sum to 1 and their
    base-2 entropy matches log2(perplexity) within ``tol`` whenever that
    target is attainable. After ``max_steps`` bisections the best effort
    is returned.
    """
    d = np.asarray(distances_row, dtype=float).ravel()
    if d.size < 2:
        raise TooFewPoints(f"calibration row needs >= 2 distances, got {d.size}")
    target = np.log2(perplexity)
    beta, lo, hi = 1.0, 0.0, np.inf
    h, p = _entropy_and_probs(d, beta)
    for _ in range(max_steps):
        if abs(h - target) <= tol:
            break
        if h > target:  # too spread out: increase beta (narrow kernel)
            lo = beta
            beta = beta * 2.0 if np.isinf(hi) else (beta + hi) / 2.0
        else:
            hi = beta
            beta = (lo + beta) / 2.0
        h, p = _entropy_and_probs(d, beta)
    return float(np.sqrt(1.0 / (2.0 * beta))), p


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def _jitter_duplicates(x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    _, inverse, counts = np.unique(x, axis=0, return_inverse=True, return_counts=True)
    dup = counts[inverse] > 1
    if not dup.any():
        return x
    out = x.copy()
    out[dup] += rng.normal(0.0, 1e-9, size=(int(dup.sum()), x.shape[1]))
    return out


def joint_affinities(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Symmetrized affinity matrix p_ij; non-negative, sums to 1."""
    n = x.shape[0]
    d = _pairwise_sq_dists(x)
    others = ~np.eye(n, dtype=bool)
    cond = np.zeros((n, n))
    for i in range(n):
        _, probs = calibrate_row(d[i][others[i]], perplexity)
        cond[i][others[i]] = probs
    return (cond + cond.T) / (2.0 * n)


def _low_dim_kernel(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    num = 1.0 / (1.0 + _pairwise_sq_dists(y))
    np.fill_diagonal(num, 0.0)
    q = num / num.sum()
    return num, q


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    _, q = _low_dim_kernel(y)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], _EPS))))


def tsne_gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of KL(P||Q); pairwise forces are antisymmetric by construction."""
    num, q = _low_dim_kernel(y)
    pq = (p - q) * num
    return 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)


def tsne(matrix, config: TsneConfig = TsneConfig()) -> Embedding:
    x = np.ascontiguousarray(matrix, dtype=float)  # layout affects float reductions
    if x.ndim != 2 or x.shape[0] < 4:
        raise TooFewPoints(f"t-SNE needs >= 4 points, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFinite("t-SNE input contains non-finite values")
    n = x.shape[0]
    rng = np.random.default_rng(config.seed)
    x = _jitter_duplicates(x, rng)

    perplexity = max(2.0, min(config.perplexity, (n - 1) / 3.0))
    p = joint_affinities(x, perplexity)

    y = rng.normal(0.0, 1e-4, size=(n, 2))
    kl_initial = kl_divergence(p, y)
    update = np.zeros_like(y)
    gains = np.ones_like(y)  # delta-bar-delta gains damp oscillating coordinates
    # steps larger than ~N/exaggeration overshoot pairwise attraction and
    # blow the layout up during the compression phase, so cap the rate there
    lr = min(config.learning_rate, max(n / config.exaggeration_factor, 10.0))
    for it in range(config.n_iter):
        p_eff = p * config.exaggeration_factor if it < config.exaggeration_iters else p
        grad = tsne_gradient(p_eff, y)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        momentum = config.momentum_early if it < config.exaggeration_iters else config.momentum_late
        update = momentum * update - lr * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
    kl_final = kl_divergence(p, y)
    return Embedding(points=y, kl_initial=kl_initial, kl_final=kl_final)


def embedding_to_csv(window_ids, embedding: Embedding) -> str:
    lines = ["window_id,x,y"]
    for wid, (px, py) in zip(window_ids, embedding.points):
        lines.append(f"{int(wid)},{float(px)!r},{float(py)!r}")
    return "\n".join(lines) + "\n"


def embedding_from_csv(text: str) -> tuple[list[int], np.ndarray]:
    lines = [ln for ln in text.split("\n") if ln]
    ids, pts = [], []
    for ln in lines[1:]:
        wid, px, py = ln.split(",")
        ids.append(int(wid))
        pts.append((float(px), float(py)))
    return ids, np.asarray(pts, dtype=float)
