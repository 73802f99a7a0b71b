"""Differentiable operations over Tensor.

Shapes are explicit: elementwise ops require identical shapes (the only
broadcasting admitted is python-scalar-with-tensor), matmul accepts the three
layouts the model needs (2Dx2D, batched 3Dx3D, 3Dx2D with a shared right
operand), and anything else is a ShapeError up front. Integer index arrays
(top-k indices, token ids) are plain numpy arrays, not Tensors.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from est.errors import NumericError, ShapeError
from est.tensor.engine import Tensor, record

RMS_EPS = 1e-6
BCE_EPS = 1e-7
MASK_FILL = -1e9


def _same_shape(a: Tensor, b: Tensor, op: str):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def add(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        out = Tensor(a.data + b)
        return record("add_scalar", [a], out, lambda g: [g])
    _same_shape(a, b, "add")
    out = Tensor(a.data + b.data)
    return record("add", [a, b], out, lambda g: [g, g])


def sub(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        out = Tensor(a.data - b)
        return record("sub_scalar", [a], out, lambda g: [g])
    _same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)
    return record("sub", [a, b], out, lambda g: [g, -g])


def mul(a: Tensor, b) -> Tensor:
    if isinstance(b, (int, float)):
        out = Tensor(a.data * b)
        return record("mul_scalar", [a], out, lambda g: [g * b])
    _same_shape(a, b, "mul")
    out = Tensor(a.data * b.data)
    return record("mul", [a, b], out, lambda g: [g * b.data, g * a.data])


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2D @ 2D, batched 3D @ 3D, or 3D @ 2D (right operand shared per batch)."""
    ad, bd = a.data, b.data
    if ad.ndim == 2 and bd.ndim == 2:
        if ad.shape[1] != bd.shape[0]:
            raise ShapeError(f"matmul: inner extents differ for {ad.shape} @ {bd.shape}")
        out = Tensor(ad @ bd)

        def vjp(g):
            return [g @ bd.T, ad.T @ g]

        return record("matmul", [a, b], out, vjp)
    if ad.ndim == 3 and bd.ndim == 3:
        if ad.shape[0] != bd.shape[0] or ad.shape[2] != bd.shape[1]:
            raise ShapeError(f"matmul: incompatible batched shapes {ad.shape} @ {bd.shape}")
        out = Tensor(np.matmul(ad, bd))

        def vjp(g):
            return [np.matmul(g, bd.transpose(0, 2, 1)), np.matmul(ad.transpose(0, 2, 1), g)]

        return record("matmul", [a, b], out, vjp)
    if ad.ndim == 3 and bd.ndim == 2:
        if ad.shape[2] != bd.shape[0]:
            raise ShapeError(f"matmul: inner extents differ for {ad.shape} @ {bd.shape}")
        B, m, k = ad.shape
        out = Tensor((ad.reshape(B * m, k) @ bd).reshape(B, m, bd.shape[1]))

        def vjp(g):
            g2 = g.reshape(B * m, -1)
            return [(g2 @ bd.T).reshape(B, m, k), ad.reshape(B * m, k).T @ g2]

        return record("matmul", [a, b], out, vjp)
    raise ShapeError(f"matmul: unsupported ranks {ad.shape} @ {bd.shape}")


def token_matmul(x: Tensor, w: Tensor) -> Tensor:
    """Per-token linear map: out[:, i, :] = x[:, i, :] @ w[i].

    x is (B, L, d), w is (L, d, k); each sequence position has its own
    projection matrix.
    """
    xd, wd = x.data, w.data
    if xd.ndim != 3 or wd.ndim != 3 or xd.shape[1] != wd.shape[0] or xd.shape[2] != wd.shape[1]:
        raise ShapeError(f"token_matmul: shapes {xd.shape} and {wd.shape} do not align")
    B, L, d = xd.shape
    k = wd.shape[2]
    o = np.empty((B, L, k), dtype=xd.dtype)
    for i in range(L):
        np.matmul(xd[:, i, :], wd[i], out=o[:, i, :])
    out = Tensor(o)

    def vjp(g):
        dx = np.empty_like(xd)
        dw = np.empty_like(wd)
        for i in range(L):
            dx[:, i, :] = g[:, i, :] @ wd[i].T
            dw[i] = xd[:, i, :].T @ g[:, i, :]
        return [dx, dw]

    return record("token_matmul", [x, w], out, vjp)


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    inv = np.argsort(axes)
    out = Tensor(x.data.transpose(axes))
    return record("transpose", [x], out, lambda g: [g.transpose(inv)])


def reshape(x: Tensor, shape) -> Tensor:
    orig = x.data.shape
    out = Tensor(x.data.reshape(shape))
    return record("reshape", [x], out, lambda g: [g.reshape(orig)])


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis))
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        idx = [slice(None)] * g.ndim
        grads = []
        for i in range(len(sizes)):
            idx[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(g[tuple(idx)])
        return grads

    return record("concat", list(tensors), out, vjp)


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice along one axis."""
    idx = [slice(None)] * x.data.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)
    out = Tensor(x.data[idx])

    def vjp(g):
        dx = np.zeros_like(x.data)
        dx[idx] = g
        return [dx]

    return record("narrow", [x], out, vjp)


def split(x: Tensor, sizes: Sequence[int], axis: int) -> list[Tensor]:
    parts, start = [], 0
    for s in sizes:
        parts.append(narrow(x, axis, start, s))
        start += s
    if start != x.data.shape[axis]:
        raise ShapeError(f"split: sizes {list(sizes)} do not cover axis extent {x.data.shape[axis]}")
    return parts


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum())
    shape = x.data.shape
    return record("sum_all", [x], out, lambda g: [np.broadcast_to(g, shape).copy()])


def sum_axis(x: Tensor, axis: int) -> Tensor:
    out = Tensor(x.data.sum(axis=axis))
    return record("sum_axis", [x], out, lambda g: [np.repeat(np.expand_dims(g, axis), x.data.shape[axis], axis)])


def mean_axis(x: Tensor, axis: int) -> Tensor:
    """Mean-pool along one axis (typically the sequence axis)."""
    n = x.data.shape[axis]
    out = Tensor(x.data.mean(axis=axis))
    return record("mean_axis", [x], out, lambda g: [np.repeat(np.expand_dims(g, axis), n, axis) / n])


def sigmoid(x: Tensor) -> Tensor:
    xd = x.data
    y = np.empty_like(xd)
    pos = xd >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-xd[pos]))
    ex = np.exp(xd[~pos])
    y[~pos] = ex / (1.0 + ex)
    out = Tensor(y)
    return record("sigmoid", [x], out, lambda g: [g * y * (1.0 - y)])


def silu(x: Tensor) -> Tensor:
    xd = x.data
    s = 1.0 / (1.0 + np.exp(-np.clip(xd, -60, 60)))
    out = Tensor(xd * s)
    return record("silu", [x], out, lambda g: [g * s * (1.0 + xd * (1.0 - s))])


def softmax_rows(x: Tensor) -> Tensor:
    """Row-stable softmax over the last axis; rows sum to 1."""
    xd = x.data
    if not np.all(np.isfinite(xd)):
        raise NumericError("softmax_rows: non-finite input")
    m = xd.max(axis=-1, keepdims=True)
    e = np.exp(xd - m)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y)

    def vjp(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return [y * (g - dot)]

    return record("softmax_rows", [x], out, vjp)


def rms_norm(x: Tensor, scale: Tensor, eps: float = RMS_EPS) -> Tensor:
    """Root-mean-square normalization over the last axis with a learned scale."""
    xd, sd = x.data, scale.data
    d = xd.shape[-1]
    if sd.shape != (d,):
        raise ShapeError(f"rms_norm: scale shape {sd.shape} != ({d},)")
    ms = (xd * xd).mean(axis=-1, keepdims=True)
    r = 1.0 / np.sqrt(ms + eps)
    xhat = xd * r
    out = Tensor(xhat * sd)

    def vjp(g):
        gh = g * sd
        dot = (gh * xd).sum(axis=-1, keepdims=True)
        dx = r * gh - xd * (r ** 3) * (dot / d)
        dscale = (g * xhat).reshape(-1, d).sum(axis=0)
        return [dx, dscale]

    return record("rms_norm", [x, scale], out, vjp)


def binary_cross_entropy(p: Tensor, labels: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of predicted probabilities against 0/1 labels.

    Probabilities are clamped to [1e-7, 1 - 1e-7]; the clamp has zero gradient
    outside the open interval.
    """
    pd = p.data
    y = np.asarray(labels, dtype=pd.dtype)
    if y.shape != pd.shape:
        raise ShapeError(f"binary_cross_entropy: labels shape {y.shape} != {pd.shape}")
    pc = np.clip(pd, BCE_EPS, 1.0 - BCE_EPS)
    n = max(pd.size, 1)
    loss = -(y * np.log(pc) + (1.0 - y) * np.log1p(-pc)).sum() / n
    out = Tensor(loss)

    def vjp(g):
        inside = (pd > BCE_EPS) & (pd < 1.0 - BCE_EPS)
        dp = (pc - y) / (pc * (1.0 - pc)) / n
        return [g * dp * inside]

    return record("bce", [p], out, vjp)


def topk_rows(x: Tensor, k: int):
    """Per-row top-k over the last axis, descending, ties to the lowest index.

    Returns (indices, values): indices is a plain int array, values a Tensor
    whose gradient scatters back to the selected positions.
    """
    xd = x.data
    n = xd.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"topk_rows: k={k} outside [1, {n}]")
    order = np.argsort(-xd, axis=-1, kind="stable")[..., :k]
    vals = np.take_along_axis(xd, order, axis=-1)
    out = Tensor(vals)

    def vjp(g):
        dx = np.zeros_like(xd)
        np.put_along_axis(dx, order, g, axis=-1)
        return [dx]

    return order, record("topk_rows", [x], out, vjp)


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """out[i, j, :] = x[idx[i, j], :] for x (L, d) and idx (L, k)."""
    xd = x.data
    if xd.ndim != 2 or idx.ndim != 2:
        raise ShapeError(f"gather_rows: expected 2D inputs, got {xd.shape} and {idx.shape}")
    L, d = xd.shape
    bad = (idx < 0) | (idx >= L)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise IndexError(f"gather_rows: index {idx[i, j]} out of range [0, {L}) at position ({i}, {j})")
    out = Tensor(xd[idx])

    def vjp(g):
        dx = np.zeros_like(xd)
        np.add.at(dx, idx.ravel(), g.reshape(-1, d))
        return [dx]

    return record("gather_rows", [x], out, vjp)


def batched_gather(x: Tensor, idx: np.ndarray) -> Tensor:
    """out[b, i, j, :] = x[b, idx[b, i, j], :] for x (B, L, d), idx (B, R, K)."""
    xd = x.data
    B, L, d = xd.shape
    if idx.ndim != 3 or idx.shape[0] != B:
        raise ShapeError(f"batched_gather: idx shape {idx.shape} incompatible with {xd.shape}")
    bad = (idx < 0) | (idx >= L)
    if bad.any():
        b, i, j = np.argwhere(bad)[0]
        raise IndexError(f"batched_gather: index {idx[b, i, j]} out of range [0, {L}) at position ({b}, {i}, {j})")
    flat = xd.reshape(B * L, d)
    fidx = idx + (np.arange(B, dtype=idx.dtype) * L)[:, None, None]
    out = Tensor(flat[fidx.reshape(-1)].reshape(*idx.shape, d))

    def vjp(g):
        dflat = np.zeros_like(flat)
        np.add.at(dflat, fidx.reshape(-1), g.reshape(-1, d))
        return [dflat.reshape(B, L, d)]

    return record("batched_gather", [x], out, vjp)


def embedding(table: Tensor, ids: np.ndarray, valid: Optional[np.ndarray] = None) -> Tensor:
    """Row lookup with optional validity mask; invalid positions yield zeros
    and receive no gradient."""
    td = table.data
    V, e = td.shape
    ids = np.asarray(ids)
    if valid is None:
        valid = np.ones(ids.shape, dtype=bool)
    safe = np.where(valid, ids, 0).astype(np.int64).astype(np.intp)
    if valid.any():
        bad = ((safe >= V) | (safe < 0)) & valid
        if bad.any():
            pos = np.argwhere(bad)[0]
            raise IndexError(f"embedding: id {safe[tuple(pos)]} out of range [0, {V}) at position {tuple(pos)}")
    o = td[safe] * valid[..., None]
    out = Tensor(o)

    def vjp(g):
        dt = np.zeros_like(td)
        np.add.at(dt, safe[valid], g[valid])
        return [dt]

    return record("embedding", [table], out, vjp)


def masked_softmax_rows(x: Tensor, key_valid: np.ndarray) -> Tensor:
    """Softmax over the last axis with invalid keys excluded.

    ``key_valid`` broadcasts against x (e.g. (B, 1, L) against (B, R, L)).
    Invalid columns get an additive -1e9 before the stable softmax, which
    underflows their weight to exactly zero. Rows with no valid key at all
    are zeroed entirely (the residual stream passes through unchanged).
    """
    mask = np.broadcast_to(np.asarray(key_valid, dtype=x.data.dtype), x.data.shape).copy()
    shifted = add(x, Tensor((1.0 - mask) * MASK_FILL))
    soft = softmax_rows(shifted)
    rows_alive = (mask.max(axis=-1, keepdims=True) > 0).astype(x.data.dtype)
    return mul(soft, Tensor(np.broadcast_to(rows_alive, soft.data.shape).copy()))
