from est.tensor.engine import DEFAULT_DTYPE, Graph, Tensor, backward
from est.tensor.gradcheck import grad_check, grad_check_many
from est.tensor.ops import (
    add,
    batched_gather,
    binary_cross_entropy,
    concat,
    embedding,
    gather_rows,
    masked_softmax_rows,
    matmul,
    mean_axis,
    mul,
    narrow,
    reshape,
    rms_norm,
    sigmoid,
    silu,
    softmax_rows,
    split,
    sub,
    sum_all,
    sum_axis,
    token_matmul,
    topk_rows,
    transpose,
)

__all__ = [
    "DEFAULT_DTYPE",
    "Graph",
    "Tensor",
    "backward",
    "grad_check",
    "grad_check_many",
    "add",
    "batched_gather",
    "binary_cross_entropy",
    "concat",
    "embedding",
    "gather_rows",
    "masked_softmax_rows",
    "matmul",
    "mean_axis",
    "mul",
    "narrow",
    "reshape",
    "rms_norm",
    "sigmoid",
    "silu",
    "softmax_rows",
    "split",
    "sub",
    "sum_all",
    "sum_axis",
    "token_matmul",
    "topk_rows",
    "transpose",
]
