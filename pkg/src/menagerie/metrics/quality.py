"""Retrieval and distribution metrics over a joint text-motion embedding
space: R-precision, Frechet distance, matched-pair distance, and diversity."""

from typing import Tuple

import numpy as np


class MetricError(ValueError):
    pass


def r_precision(text_emb: np.ndarray, motion_emb: np.ndarray, k: int,
                pool_size: int, seed: int) -> float:
    """Fraction of motions whose matched text ranks in the top k of a pool of
    the true text plus pool_size-1 seeded distractors.

    Distance ties count against the match (a tying distractor ranks ahead).
    """
    text_emb = np.asarray(text_emb, dtype=float)
    motion_emb = np.asarray(motion_emb, dtype=float)
    if text_emb.shape != motion_emb.shape or text_emb.ndim != 2:
        raise MetricError("matched (B, e) embedding matrices required")
    B = text_emb.shape[0]
    if not 1 <= k <= pool_size:
        raise MetricError("need 1 <= k <= pool_size")
    if B < pool_size:
        raise MetricError(f"batch of {B} cannot fill pools of {pool_size}")
    rng = np.random.default_rng(seed)
    hits = 0
    for i in range(B):
        others = np.delete(np.arange(B), i)
        distractors = rng.choice(others, size=pool_size - 1, replace=False)
        d_true = np.linalg.norm(motion_emb[i] - text_emb[i])
        d_pool = np.linalg.norm(text_emb[distractors] - motion_emb[i], axis=1)
        rank = 1 + int(np.sum(d_pool <= d_true))
        if rank <= k:
            hits += 1
    return hits / B


def _moments(samples: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mu = samples.mean(axis=0)
    sigma = np.cov(samples, rowvar=False, ddof=1)
    return mu, np.atleast_2d(sigma)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    sym = (matrix + matrix.T) / 2
    vals, vecs = np.linalg.eigh(sym)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid_from_moments(mu1, sigma1, mu2, sigma2) -> float:
    """Frechet distance between Gaussians given their moments.

    tr((S1 S2)^{1/2}) is computed as tr(sqrt(sqrt(S1) S2 sqrt(S1))) via
    symmetric eigendecomposition with negative eigenvalues clamped to zero.
    """
    mu1, mu2 = np.atleast_1d(np.asarray(mu1, dtype=float)), np.atleast_1d(np.asarray(mu2, dtype=float))
    sigma1, sigma2 = np.atleast_2d(np.asarray(sigma1, dtype=float)), np.atleast_2d(np.asarray(sigma2, dtype=float))
    root1 = _psd_sqrt(sigma1)
    inner = root1 @ sigma2 @ root1
    vals = np.linalg.eigvalsh((inner + inner.T) / 2)
    tr_sqrt = float(np.sqrt(np.clip(vals, 0.0, None)).sum())
    diff = mu1 - mu2
    value = float(diff @ diff + np.trace(sigma1) + np.trace(sigma2) - 2 * tr_sqrt)
    return max(value, 0.0)


def fid(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two sample sets."""
    samples_a = np.asarray(samples_a, dtype=float)
    samples_b = np.asarray(samples_b, dtype=float)
    if samples_a.ndim != 2 or samples_b.ndim != 2:
        raise MetricError("sample sets must be 2-D")
    if samples_a.shape[0] < 2 or samples_b.shape[0] < 2:
        raise MetricError("need at least 2 samples per set for a covariance")
    if samples_a.shape[1] != samples_b.shape[1]:
        raise MetricError("sample sets must share the embedding dimension")
    return fid_from_moments(*_moments(samples_a), *_moments(samples_b))


def multimodal_dist(text_emb: np.ndarray, motion_emb: np.ndarray) -> float:
    """Mean Euclidean distance between matched text/motion pairs."""
    text_emb = np.asarray(text_emb, dtype=float)
    motion_emb = np.asarray(motion_emb, dtype=float)
    if text_emb.shape != motion_emb.shape or text_emb.ndim != 2 or text_emb.shape[0] == 0:
        raise MetricError("matched non-empty (B, e) matrices required")
    return float(np.linalg.norm(text_emb - motion_emb, axis=1).mean())


def diversity(motion_emb: np.ndarray, pairs: int, seed: int) -> float:
    """Mean distance over seeded random index pairs (i != j).

    The number of sampled pairs is clamped to B(B-1)/2.
    """
    motion_emb = np.asarray(motion_emb, dtype=float)
    B = motion_emb.shape[0]
    if B < 2:
        raise MetricError("diversity needs at least two embeddings")
    if pairs < 1:
        raise MetricError("pairs must be >= 1")
    pairs = min(pairs, B * (B - 1) // 2)
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(pairs):
        i = int(rng.integers(B))
        j = int(rng.integers(B))
        while j == i:
            j = int(rng.integers(B))
        total += float(np.linalg.norm(motion_emb[i] - motion_emb[j]))
    return total / pairs
