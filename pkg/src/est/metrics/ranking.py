"""AUC and per-user GAUC ranking metrics."""

from __future__ import annotations

import numpy as np

from est.errors import UndefinedMetricError


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score+ > score-) + 0.5 * P(tie).

    Computed with average ranks so ties contribute exactly one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("auc needs at least one positive and one negative label")
    ranks = _average_ranks(scores)
    rank_sum_pos = ranks[labels == 1].sum()
    return float((rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def gauc(scores, labels, user_ids):
    """Impression-count-weighted mean of per-user AUC.

    Users whose impressions are single-class are excluded from both the
    numerator and the weight. Returns (gauc, n_users_scored).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    user_ids = np.asarray(user_ids)
    total_w = 0.0
    total = 0.0
    n_scored = 0
    for uid in np.unique(user_ids):
        sel = user_ids == uid
        ls = labels[sel]
        if ls.min() == ls.max():
            continue
        w = int(sel.sum())
        total += w * auc(scores[sel], ls)
        total_w += w
        n_scored += 1
    if n_scored == 0:
        raise UndefinedMetricError("gauc: no user has both a positive and a negative impression")
    return total / total_w, n_scored
