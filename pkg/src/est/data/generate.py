"""Synthetic request generation with a planted candidate-behavior signal.

Each user has a latent interest mixture over content clusters; behaviors are
drawn from it (with a uniform noise floor). Click probability combines the
candidate-vs-history content interaction s_bar with a profile-category
affinity, so ranking quality hinges on modeling token-level interactions:
any mean-pooled summary of the history loses the top-5 structure of s_bar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from est.data.catalog import Catalog
from est.data.config import PAD_SENTINEL, GenConfig
from est.seeding import rng_for

TOP_SIM_COUNT = 5  # history items entering the s_bar interaction


@dataclass
class Candidate:
    item_id: int
    fields: np.ndarray  # candidate-side categorical ids, uint32
    label: int


@dataclass
class Request:
    user_id: int
    user_fields: np.ndarray    # user-side categorical ids, uint32
    short_seq: np.ndarray      # (l_max_u,) uint32, sentinel padded, oldest first
    lifelong_seq: np.ndarray   # (l_max_l,) uint32, sentinel padded, oldest first
    candidates: list[Candidate] = field(default_factory=list)

    def __eq__(self, other):
        return (
            isinstance(other, Request)
            and self.user_id == other.user_id
            and np.array_equal(self.user_fields, other.user_fields)
            and np.array_equal(self.short_seq, other.short_seq)
            and np.array_equal(self.lifelong_seq, other.lifelong_seq)
            and len(self.candidates) == len(other.candidates)
            and all(
                a.item_id == b.item_id
                and np.array_equal(a.fields, b.fields)
                and a.label == b.label
                for a, b in zip(self.candidates, other.candidates)
            )
        )


@dataclass
class Sample:
    """One impression: a single (user, candidate) pair with its label."""

    user_id: int
    candidate_item_id: int
    label: int
    non_behavioral: np.ndarray  # user fields followed by candidate fields
    short_seq: np.ndarray
    lifelong_seq: np.ndarray


def request_samples(req: Request) -> Iterator[Sample]:
    for cand in req.candidates:
        yield Sample(
            user_id=req.user_id,
            candidate_item_id=cand.item_id,
            label=cand.label,
            non_behavioral=np.concatenate([req.user_fields, cand.fields]),
            short_seq=req.short_seq,
            lifelong_seq=req.lifelong_seq,
        )


def valid_items(seq: np.ndarray) -> np.ndarray:
    return seq[seq != PAD_SENTINEL]


class UserModel:
    """Deterministic per-user latents: interest mixture, profile fields and
    behavior history, all derived from named sub-streams of the seed."""

    def __init__(self, cfg: GenConfig, catalog: Catalog):
        self.cfg = cfg
        self.catalog = catalog
        # items per cluster, padded to uniform width for vectorized draws
        order = np.argsort(catalog.item_category, kind="stable")
        cats = catalog.item_category[order]
        self.cluster_items = []
        for c in range(cfg.clusters):
            self.cluster_items.append(order[cats == c].astype(np.uint32))
        self.cluster_sizes = np.array([len(x) for x in self.cluster_items])
        width = int(self.cluster_sizes.max())
        self.cluster_table = np.zeros((cfg.clusters, width), dtype=np.uint32)
        for c, items in enumerate(self.cluster_items):
            self.cluster_table[c, : len(items)] = items
        # popularity bucket: deterministic function of the item id
        pop_rng = rng_for(cfg.seed, "popularity")
        self.item_pop = pop_rng.integers(0, cfg.pop_buckets, cfg.num_items).astype(np.uint32)
        # user-group x item-category affinity, in [-1, 1]
        aff_rng = rng_for(cfg.seed, "affinity")
        self.affinity = aff_rng.uniform(-1.0, 1.0, (cfg.user_groups, cfg.clusters))

    def user_state(self, uid: int):
        cfg = self.cfg
        rng = rng_for(cfg.seed, "user", uid)
        interests = rng.choice(cfg.clusters, size=cfg.interests_per_user, replace=False)
        weights = rng.dirichlet(np.ones(cfg.interests_per_user) * 2.0)
        group = int(rng.integers(0, cfg.user_groups))
        activity = int(rng.integers(0, cfg.activity_buckets))
        n_short = int(rng.integers(max(1, cfg.l_max_u // 2), cfg.l_max_u + 1))
        n_life = int(rng.integers(max(cfg.l_bc, cfg.l_max_l // 2), cfg.l_max_l + 1))
        hist = self._draw_behaviors(rng, interests, weights, n_short + n_life)
        short = hist[n_life:]
        lifelong = hist[:n_life]
        return {
            "interests": interests,
            "weights": weights,
            "group": group,
            "activity": activity,
            "short": short,
            "lifelong": lifelong,
        }

    def _draw_behaviors(self, rng, interests, weights, n):
        cfg = self.cfg
        probs = np.zeros(cfg.clusters)
        probs[interests] = weights
        probs = probs * (1.0 - cfg.behavior_noise_prob)
        probs += cfg.behavior_noise_prob * self.cluster_sizes / self.cluster_sizes.sum()
        probs /= probs.sum()
        clusters = rng.choice(cfg.clusters, size=n, p=probs)
        offsets = np.floor(rng.random(n) * self.cluster_sizes[clusters]).astype(np.int64)
        return self.cluster_table[clusters, offsets]

    def draw_candidates(self, rng, interests, weights, n):
        cfg = self.cfg
        from_interest = rng.random(n) < cfg.candidate_interest_prob
        out = np.empty(n, dtype=np.uint32)
        k = int(from_interest.sum())
        if k:
            out[from_interest] = self._draw_behaviors(rng, interests, weights, k)
        if k < n:
            out[~from_interest] = rng.integers(0, cfg.num_items, n - k).astype(np.uint32)
        return out


def interaction_score(history_items: np.ndarray, cand_item: int, catalog: Catalog,
                      top: int = TOP_SIM_COUNT) -> float:
    """Mean cosine between the candidate's content and its `top` most similar
    history items (all of them if the history is shorter)."""
    if len(history_items) == 0:
        return 0.0
    sims = catalog.content[history_items].astype(np.float64) @ catalog.content[cand_item].astype(np.float64)
    k = min(top, len(sims))
    if k == len(sims):
        return float(sims.mean())
    part = np.partition(sims, len(sims) - k)[len(sims) - k:]
    return float(part.mean())


def click_probability(cfg: GenConfig, s_bar: float, affinity: float) -> float:
    logit = (cfg.w_int * s_bar + cfg.w_prof * affinity + cfg.bias) / cfg.label_temperature
    return float(1.0 / (1.0 + np.exp(-logit)))


def _pad(seq: np.ndarray, length: int) -> np.ndarray:
    out = np.full(length, PAD_SENTINEL, dtype=np.uint32)
    out[: len(seq)] = seq
    return out


def generate_requests(cfg: GenConfig, catalog: Catalog,
                      n_requests: Optional[int] = None) -> Iterator[tuple[Request, np.ndarray]]:
    """Yield (request, true click probabilities per candidate)."""
    cfg.validate()
    model = UserModel(cfg, catalog)
    n_requests = cfg.n_requests if n_requests is None else n_requests
    content64 = catalog.content.astype(np.float64)
    for r in range(n_requests):
        rng = rng_for(cfg.seed, "request", r)
        uid = int(rng.integers(0, cfg.num_users))
        u = model.user_state(uid)
        cand_items = model.draw_candidates(rng, u["interests"], u["weights"], cfg.candidates_per_request)
        history = np.concatenate([u["lifelong"], u["short"]])
        hist_content = content64[history]
        sims = hist_content @ content64[cand_items].T  # (H, n_cand)
        k = min(TOP_SIM_COUNT, sims.shape[0])
        top = np.partition(sims, sims.shape[0] - k, axis=0)[sims.shape[0] - k:, :]
        s_bar = top.mean(axis=0)
        aff = model.affinity[u["group"], catalog.item_category[cand_items]]
        logits = (cfg.w_int * s_bar + cfg.w_prof * aff + cfg.bias) / cfg.label_temperature
        p_true = 1.0 / (1.0 + np.exp(-logits))
        labels = (rng.random(cfg.candidates_per_request) < p_true).astype(np.uint8)
        user_fields = np.array([u["group"], u["activity"]], dtype=np.uint32)
        candidates = [
            Candidate(
                item_id=int(cand_items[j]),
                fields=np.array(
                    [catalog.item_category[cand_items[j]], model.item_pop[cand_items[j]]],
                    dtype=np.uint32,
                ),
                label=int(labels[j]),
            )
            for j in range(cfg.candidates_per_request)
        ]
        yield (
            Request(
                user_id=uid,
                user_fields=user_fields,
                short_seq=_pad(u["short"], cfg.l_max_u),
                lifelong_seq=_pad(u["lifelong"], cfg.l_max_l),
                candidates=candidates,
            ),
            p_true,
        )


def generate_dataset(cfg: GenConfig, catalog: Catalog):
    """Materialize all requests. Returns (requests, p_true list)."""
    requests, probs = [], []
    for req, p in generate_requests(cfg, catalog):
        requests.append(req)
        probs.append(p)
    return requests, probs


def gsu_retrieve(lifelong_seq: np.ndarray, candidate: int, catalog: Catalog, l_bc: int) -> np.ndarray:
    """Top-l_bc lifelong items by content cosine to the candidate.

    Ties prefer the more recent occurrence; the output keeps the original
    chronological order. An empty history yields an empty result.
    """
    items = valid_items(np.asarray(lifelong_seq, dtype=np.uint32))
    if len(items) == 0:
        return np.empty(0, dtype=np.uint32)
    if len(items) <= l_bc:
        return items.copy()
    sims = catalog.content[items].astype(np.float64) @ catalog.content[candidate].astype(np.float64)
    pos = np.arange(len(items))
    # primary: similarity descending; tie-break: position descending (recent wins)
    order = np.lexsort((-pos, -sims))[:l_bc]
    keep = np.sort(order)
    return items[keep].copy()
