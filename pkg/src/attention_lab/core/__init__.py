"""Numeric core: matrices, registered ops and reverse-mode gradients"""

from .numeric import (
    Gradient,
    Matrix,
    Tensor,
    add,
    as_tensor,
    backward,
    concat_cols,
    finite_difference_grad,
    l1_loss,
    linear_forward,
    masked_row_softmax,
    matmul,
    mul,
    relu,
    row_softmax,
    scale,
    slice_block,
    sum_all,
    transpose,
)

__all__ = [
    "Gradient", "Matrix", "Tensor", "add", "as_tensor", "backward", "concat_cols",
    "finite_difference_grad", "l1_loss", "linear_forward", "masked_row_softmax",
    "matmul", "mul", "relu", "row_softmax", "scale", "slice_block", "sum_all",
    "transpose",
]
