"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from est.tensor.engine import Graph, Tensor, backward

REL_FLOOR = 1e-8


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return float(np.max(np.abs(analytic - numeric) / denom))


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference
    gradients of a scalar-valued f at x, over every coordinate of x."""
    return grad_check_many(lambda: f(x), [x], h=h)


def grad_check_many(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5) -> float:
    """Like grad_check but for a closure over several parameter tensors.

    f is evaluated once under a recording graph for the analytic gradients,
    then 2 * total_coordinate_count more times graph-free for the central
    differences.
    """
    saved_flags = [(p.requires_grad, p.grad) for p in params]
    for p in params:
        p.requires_grad = True
        p.grad = None
    try:
        with Graph():
            loss = f()
            backward(loss)
        analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
        worst = 0.0
        for p, a in zip(params, analytic):
            flat = p.data.reshape(-1)
            num = np.zeros_like(flat)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = float(f().data)
                flat[i] = orig - h
                dn = float(f().data)
                flat[i] = orig
                num[i] = (up - dn) / (2.0 * h)
            worst = max(worst, _rel_err(a.reshape(-1), num))
        return worst
    finally:
        for p, (rg, g) in zip(params, saved_flags):
            p.requires_grad = rg
            p.grad = g
