"""Effective rank of a matrix: Frobenius-to-spectral norm-squared ratio,
normalized by the larger dimension. A rank-1 m x n matrix scores
1 / max(m, n); an identity scores exactly 1."""

from __future__ import annotations

import numpy as np

from est.errors import UndefinedMetricError

POWER_TOL = 1e-10
POWER_MAX_ITERS = 1000


def spectral_norm_sq(h: np.ndarray) -> float:
    """Largest eigenvalue of H^T H via power iteration (deterministic start)."""
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[1]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(POWER_MAX_ITERS):
        w = h.T @ (h @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v_new = w / norm
        lam_new = float(v_new @ (h.T @ (h @ v_new)))
        if abs(lam_new - lam) <= POWER_TOL * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
        v = v_new
    return lam


def effective_rank(h) -> float:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise UndefinedMetricError(f"effective_rank expects a matrix, got shape {h.shape}")
    fro_sq = float((h * h).sum())
    if fro_sq == 0.0:
        raise UndefinedMetricError("effective_rank is undefined for the zero matrix")
    spec_sq = spectral_norm_sq(h)
    return fro_sq / spec_sq / max(h.shape)
