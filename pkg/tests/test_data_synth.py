import numpy as np
import pytest

from est.data import (
    PAD_SENTINEL,
    GenConfig,
    generate_catalog,
    generate_dataset,
    gsu_retrieve,
    valid_items,
)
from est.errors import ConfigError


def small_cfg(**kw):
    base = dict(
        num_users=200,
        num_items=400,
        clusters=4,
        d_m=8,
        l_max_u=12,
        l_max_l=40,
        l_bc=6,
        n_requests=60,
        candidates_per_request=4,
        seed=9,
    )
    base.update(kw)
    return GenConfig(**base)


def test_catalog_degenerate_single_cluster():
    cfg = small_cfg(clusters=1, content_noise=0.0)
    cat = generate_catalog(cfg)
    np.testing.assert_allclose(cat.content, np.broadcast_to(cat.cluster_centers[0], cat.content.shape), atol=1e-6)


def test_catalog_deterministic():
    cfg = small_cfg()
    a = generate_catalog(cfg)
    b = generate_catalog(cfg)
    assert a == b


def test_catalog_unit_norm_rows():
    cat = generate_catalog(small_cfg())
    norms = np.linalg.norm(cat.content.astype(np.float64), axis=1)
    assert np.max(np.abs(norms - 1.0)) < 1e-6


def test_catalog_cluster_structure():
    cfg = GenConfig(num_users=10, num_items=10_000, clusters=8, d_m=16, n_requests=1,
                    l_max_u=4, l_max_l=8, l_bc=2, seed=3)
    cat = generate_catalog(cfg)
    c64 = cat.content.astype(np.float64)
    within, cross = [], []
    rng = np.random.default_rng(0)
    idx = rng.choice(cfg.num_items, 600, replace=False)
    for i in idx[:300]:
        for j in idx[300:]:
            s = float(c64[i] @ c64[j])
            if cat.item_category[i] == cat.item_category[j]:
                within.append(s)
            else:
                cross.append(s)
    assert np.mean(within) > np.mean(cross)


def test_catalog_rejects_bad_counts():
    with pytest.raises(ConfigError):
        generate_catalog(small_cfg(num_items=2, clusters=4))


def test_constant_probability_ctr_matches_bias():
    cfg = small_cfg(w_int=0.0, w_prof=0.0, bias=-1.0, n_requests=1500, candidates_per_request=4)
    cat = generate_catalog(cfg)
    requests, probs = generate_dataset(cfg, cat)
    p = 1.0 / (1.0 + np.exp(1.0))
    np.testing.assert_allclose(np.concatenate(probs), p)
    labels = np.array([c.label for r in requests for c in r.candidates], dtype=float)
    se = np.sqrt(p * (1 - p) / labels.size)
    assert abs(labels.mean() - p) < 3 * se


def test_similarity_ceiling():
    # a history identical to the candidate item drives s_bar to 1, the maximum
    from est.data.generate import click_probability, interaction_score

    cfg = small_cfg()
    cat = generate_catalog(cfg)
    cand = 7
    hist = np.full(20, cand, dtype=np.uint32)
    s = interaction_score(hist, cand, cat)
    assert abs(s - 1.0) < 1e-6
    rng = np.random.default_rng(1)
    for _ in range(50):
        other = rng.integers(0, cfg.num_items)
        assert interaction_score(hist, int(other), cat) <= s + 1e-9
    p_match = click_probability(cfg, s, 0.0)
    assert p_match == pytest.approx(1.0 / (1.0 + np.exp(-(cfg.w_int + cfg.bias))), rel=1e-9)


def test_generation_deterministic():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    r1, p1 = generate_dataset(cfg, cat)
    r2, p2 = generate_dataset(cfg, cat)
    assert r1 == r2
    for a, b in zip(p1, p2):
        np.testing.assert_array_equal(a, b)


def test_sequences_are_padded_and_in_range():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    requests, _ = generate_dataset(cfg, cat)
    for req in requests:
        for seq, cap in ((req.short_seq, cfg.l_max_u), (req.lifelong_seq, cfg.l_max_l)):
            assert seq.shape == (cap,)
            body = valid_items(seq)
            assert np.all(body < cfg.num_items)
            # padding is a contiguous tail
            pad_positions = np.nonzero(seq == PAD_SENTINEL)[0]
            if len(pad_positions):
                assert pad_positions[0] == len(body)


def test_gsu_short_history_returned_whole():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    seq = np.array([3, 1, 4], dtype=np.uint32)
    out = gsu_retrieve(seq, 5, cat, cfg.l_bc)
    np.testing.assert_array_equal(out, seq)


def test_gsu_exact_match_always_selected():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    rng = np.random.default_rng(4)
    for _ in range(20):
        cand = int(rng.integers(0, cfg.num_items))
        seq = rng.integers(0, cfg.num_items, 30).astype(np.uint32)
        seq[rng.integers(0, 30)] = cand
        out = gsu_retrieve(seq, cand, cat, 5)
        assert cand in out


def test_gsu_against_sort_oracle():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    rng = np.random.default_rng(12)
    for trial in range(25):
        n = int(rng.integers(8, 30))
        seq = rng.integers(0, cfg.num_items, n).astype(np.uint32)
        cand = int(rng.integers(0, cfg.num_items))
        l_bc = int(rng.integers(1, 8))
        out = gsu_retrieve(seq, cand, cat, l_bc)
        sims = cat.content[seq].astype(np.float64) @ cat.content[cand].astype(np.float64)
        ranked = sorted(range(n), key=lambda i: (-sims[i], -i))
        keep = sorted(ranked[: min(l_bc, n)])
        np.testing.assert_array_equal(out, seq[keep])
        # order-preserving subsequence of the input
        pos = [int(np.nonzero(seq == v)[0][0]) for v in out]
        assert all(a <= b for a, b in zip(pos, pos[1:])) or len(out) <= 1


def test_gsu_empty_history():
    cfg = small_cfg()
    cat = generate_catalog(cfg)
    out = gsu_retrieve(np.full(10, PAD_SENTINEL, dtype=np.uint32), 3, cat, 4)
    assert out.size == 0
