"""Versioned little-endian binary dataset format.

Layout (all little-endian):
  magic "ESTD" | version u32
  GenConfig block: the u32 fields in declared order, seed u64, then the f64
  fields in declared order
  catalog block: num_items u32, d_m u32, content f32 row-major,
  categories u32 x num_items, clusters u32, centers f32 row-major
  request block: count u32, then per request:
    user_id u64, n_user_fields u32, user field ids u32,
    short_seq u32 x l_max_u (sentinel padded),
    lifelong_seq u32 x l_max_l (sentinel padded),
    n_candidates u32, per candidate: item_id u64, n_fields u32,
    fields u32, label u8

Every read validates bounds and reports the byte offset of the first
malformed value.
"""

from __future__ import annotations

import struct
from typing import Optional, Sequence

import numpy as np

from est.data.catalog import Catalog
from est.data.config import GenConfig
from est.data.generate import Candidate, Request
from est.errors import FormatError

MAGIC = b"ESTD"
VERSION = 1


def write_dataset(path, cfg: GenConfig, catalog: Catalog, requests: Sequence[Request]) -> None:
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        for name in GenConfig.U32_FIELDS:
            f.write(struct.pack("<I", getattr(cfg, name)))
        f.write(struct.pack("<Q", cfg.seed))
        for name in GenConfig.F64_FIELDS:
            f.write(struct.pack("<d", float(getattr(cfg, name))))
        f.write(struct.pack("<II", catalog.num_items, catalog.d_m))
        f.write(catalog.content.astype("<f4", copy=False).tobytes())
        f.write(catalog.item_category.astype("<u4", copy=False).tobytes())
        f.write(struct.pack("<I", catalog.cluster_centers.shape[0]))
        f.write(catalog.cluster_centers.astype("<f4", copy=False).tobytes())
        f.write(struct.pack("<I", len(requests)))
        for req in requests:
            f.write(struct.pack("<Q", req.user_id))
            f.write(struct.pack("<I", len(req.user_fields)))
            f.write(np.asarray(req.user_fields, dtype="<u4").tobytes())
            f.write(np.asarray(req.short_seq, dtype="<u4").tobytes())
            f.write(np.asarray(req.lifelong_seq, dtype="<u4").tobytes())
            f.write(struct.pack("<I", len(req.candidates)))
            for cand in req.candidates:
                f.write(struct.pack("<Q", cand.item_id))
                f.write(struct.pack("<I", len(cand.fields)))
                f.write(np.asarray(cand.fields, dtype="<u4").tobytes())
                f.write(struct.pack("<B", cand.label))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.off = 0

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise FormatError(f"truncated file while reading {what}", offset=self.off)
        out = self.buf[self.off : self.off + n]
        self.off += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def u8(self, what: str) -> int:
        return struct.unpack("<B", self.take(1, what))[0]

    def f64(self, what: str) -> float:
        return struct.unpack("<d", self.take(8, what))[0]

    def u32_array(self, n: int, what: str) -> np.ndarray:
        raw = self.take(4 * n, what)
        return np.frombuffer(raw, dtype="<u4").astype(np.uint32)

    def f32_array(self, n: int, what: str) -> np.ndarray:
        raw = self.take(4 * n, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32)


MAX_SANE_COUNT = 1 << 28  # bound per-record counts so corrupt files fail fast


def read_dataset(path):
    """Returns (cfg, catalog, requests)."""
    with open(path, "rb") as f:
        buf = f.read()
    r = _Reader(buf)
    magic = r.take(4, "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    version = r.u32("version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}", offset=4)
    kwargs = {}
    for name in GenConfig.U32_FIELDS:
        kwargs[name] = r.u32(f"config field {name}")
    kwargs["seed"] = r.u64("config field seed")
    for name in GenConfig.F64_FIELDS:
        kwargs[name] = r.f64(f"config field {name}")
    cfg = GenConfig(**kwargs)
    num_items = r.u32("catalog num_items")
    d_m = r.u32("catalog d_m")
    if num_items > MAX_SANE_COUNT or d_m > MAX_SANE_COUNT:
        raise FormatError(f"implausible catalog header ({num_items} x {d_m})", offset=r.off - 8)
    content = r.f32_array(num_items * d_m, "catalog content").reshape(num_items, d_m)
    categories = r.u32_array(num_items, "catalog categories")
    n_centers = r.u32("catalog cluster count")
    if n_centers > MAX_SANE_COUNT:
        raise FormatError(f"implausible cluster count {n_centers}", offset=r.off - 4)
    centers = r.f32_array(n_centers * d_m, "catalog centers").reshape(n_centers, d_m)
    catalog = Catalog(content=content, item_category=categories, cluster_centers=centers)
    n_requests = r.u32("request count")
    if n_requests > MAX_SANE_COUNT:
        raise FormatError(f"implausible request count {n_requests}", offset=r.off - 4)
    requests = []
    for _ in range(n_requests):
        user_id = r.u64("user id")
        n_uf = r.u32("user field count")
        if n_uf > MAX_SANE_COUNT:
            raise FormatError(f"implausible user field count {n_uf}", offset=r.off - 4)
        user_fields = r.u32_array(n_uf, "user fields")
        short_seq = r.u32_array(cfg.l_max_u, "short sequence")
        lifelong_seq = r.u32_array(cfg.l_max_l, "lifelong sequence")
        n_cand = r.u32("candidate count")
        if n_cand > MAX_SANE_COUNT:
            raise FormatError(f"implausible candidate count {n_cand}", offset=r.off - 4)
        candidates = []
        for _ in range(n_cand):
            item_id = r.u64("candidate item id")
            n_cf = r.u32("candidate field count")
            if n_cf > MAX_SANE_COUNT:
                raise FormatError(f"implausible candidate field count {n_cf}", offset=r.off - 4)
            fields = r.u32_array(n_cf, "candidate fields")
            label = r.u8("label")
            if label > 1:
                raise FormatError(f"label byte {label} is not 0/1", offset=r.off - 1)
            candidates.append(Candidate(item_id=item_id, fields=fields, label=label))
        requests.append(
            Request(
                user_id=user_id,
                user_fields=user_fields,
                short_seq=short_seq,
                lifelong_seq=lifelong_seq,
                candidates=candidates,
            )
        )
    if r.off != len(buf):
        raise FormatError(f"{len(buf) - r.off} trailing bytes after last request", offset=r.off)
    return cfg, catalog, requests


def export_truth_csv(path, requests: Sequence[Request], p_true: Sequence[np.ndarray]) -> None:
    """(user_id, candidate_id, label, p_true) rows for external inspection."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("user_id,candidate_id,label,p_true\n")
        for req, probs in zip(requests, p_true):
            for cand, p in zip(req.candidates, probs):
                f.write(f"{req.user_id},{cand.item_id},{cand.label},{p:.10g}\n")
