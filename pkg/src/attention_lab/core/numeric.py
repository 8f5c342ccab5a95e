"""
Numeric core for the attention lab

Dense float64 matrices with a small reverse-mode gradient graph. Each op
returns a new Tensor that remembers its parents and a closure mapping the
upstream gradient to one gradient per parent. The op set is exactly what the
attention variants and the toy trainer need; this is not a general autodiff.
"""

from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import DegenerateRowError, EvaluationError, ShapeError, UnknownParameterError

ArrayLike = Union[np.ndarray, Sequence[Sequence[float]], float]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Tensor:
    """Row-major 2-d matrix node in a gradient graph"""

    __slots__ = ("data", "name", "is_parameter", "_parents", "_backward")

    def __init__(self,
                 data: np.ndarray,
                 parents: Tuple["Tensor", ...] = (),
                 backward: Optional[BackwardFn] = None,
                 name: Optional[str] = None,
                 is_parameter: bool = False):
        self.data = data
        self.name = name
        self.is_parameter = is_parameter
        self._parents = parents
        self._backward = backward

    @classmethod
    def constant(cls, values: ArrayLike, name: Optional[str] = None) -> "Tensor":
        """Leaf that never receives a gradient"""
        return cls(_as_matrix(values), name=name)

    @classmethod
    def parameter(cls, values: ArrayLike, name: str) -> "Tensor":
        """Trainable leaf; `name` is its identifier in Gradient results"""
        return cls(_as_matrix(values).copy(), name=name, is_parameter=True)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        kind = "parameter" if self.is_parameter else "tensor"
        return f"Tensor({kind}, name={self.name!r}, shape={self.data.shape})"


Matrix = Tensor


@dataclass
class Gradient:
    """Partial derivatives of a scalar loss w.r.t. one parameter"""
    parameter: str
    values: np.ndarray


def _as_matrix(values: ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=np.float64)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1)
    if array.ndim != 2:
        raise ShapeError(f"Matrix must be 2-d, got {array.ndim} dims")
    if not np.all(np.isfinite(array)):
        raise EvaluationError("Matrix contains non-finite values")
    return array


def as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor.constant(value)


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


# ----------------------------------------------------------------------------
# Registered operations
# ----------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} x {b.shape}")

    def backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return Tensor(a.data @ b.data, (a, b), backward)


def transpose(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data.T.copy(), (a,), lambda g: (g.T,))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; `b` may also be a 1 x cols row broadcast over rows"""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape == b.shape:
        return Tensor(a.data + b.data, (a, b), lambda g: (g, g))
    if b.rows == 1 and b.cols == a.cols:
        return Tensor(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
    raise ShapeError(f"add: shapes {a.shape} and {b.shape} differ")


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same_shape(a, b, "mul")
    return Tensor(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, factor: float) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data * factor, (a,), lambda g: (g * factor,))


def relu(a: Tensor) -> Tensor:
    a = as_tensor(a)
    active = a.data > 0
    return Tensor(np.where(active, a.data, 0.0), (a,), lambda g: (g * active,))


def _stable_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def _softmax_node(a: Tensor, weights: np.ndarray) -> Tensor:
    def backward(g: np.ndarray):
        inner = (g * weights).sum(axis=1, keepdims=True)
        return (weights * (g - inner),)

    return Tensor(weights, (a,), backward)


def row_softmax(m: Tensor) -> Tensor:
    """Softmax over each row, stabilized by subtracting the row max"""
    m = as_tensor(m)
    return _softmax_node(m, _stable_softmax(m.data))


def masked_row_softmax(m: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the permitted entries of each row; the rest are exactly 0"""
    m = as_tensor(m)
    mask = np.asarray(getattr(mask, "allowed", mask), dtype=bool)
    if mask.shape != m.shape:
        raise ShapeError(f"mask shape {mask.shape} differs from scores {m.shape}")
    empty_rows = np.flatnonzero(~mask.any(axis=1))
    if empty_rows.size:
        raise DegenerateRowError(f"mask rows {empty_rows.tolist()} permit no keys")
    return _softmax_node(m, _stable_softmax(np.where(mask, m.data, -np.inf)))


def linear_forward(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """x @ w + b with b broadcast over rows"""
    x, w, b = as_tensor(x), as_tensor(w), as_tensor(b)
    if x.cols != w.rows:
        raise ShapeError(f"linear: input {x.shape} vs weight {w.shape}")
    if b.shape != (1, w.cols):
        raise ShapeError(f"linear: bias {b.shape} needs (1, {w.cols})")

    def backward(g: np.ndarray):
        return g @ w.data.T, x.data.T @ g, g.sum(axis=0, keepdims=True)

    return Tensor(x.data @ w.data + b.data, (x, w, b), backward)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    if len({p.rows for p in parts}) != 1:
        raise ShapeError("concat_cols: row counts differ")
    bounds = np.cumsum([0] + [p.cols for p in parts])

    def backward(g: np.ndarray):
        return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(parts)))

    return Tensor(np.concatenate([p.data for p in parts], axis=1), tuple(parts), backward)


def slice_block(a: Tensor, rows: int, cols: int) -> Tensor:
    """Top-left rows x cols block"""
    a = as_tensor(a)
    if rows > a.rows or cols > a.cols:
        raise ShapeError(f"slice {rows}x{cols} exceeds {a.shape}")

    def backward(g: np.ndarray):
        full = np.zeros_like(a.data)
        full[:rows, :cols] = g
        return (full,)

    return Tensor(a.data[:rows, :cols].copy(), (a,), backward)


def sum_all(a: Tensor) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.array([[a.data.sum()]]), (a,), lambda g: (np.full_like(a.data, g[0, 0]),))


def l1_loss(predicted: Tensor, target: ArrayLike, rows: Optional[np.ndarray] = None) -> Tensor:
    """Mean absolute error over the selected rows (all rows when `rows` is None)"""
    predicted = as_tensor(predicted)
    target = np.asarray(target, dtype=np.float64)
    if target.shape != predicted.shape:
        raise ShapeError(f"l1_loss: prediction {predicted.shape} vs target {target.shape}")
    selected = np.ones(predicted.rows, dtype=bool) if rows is None else np.asarray(rows, dtype=bool)
    count = int(selected.sum()) * predicted.cols
    if count == 0:
        raise ShapeError("l1_loss: no rows selected")
    residual = np.where(selected[:, None], predicted.data - target, 0.0)

    def backward(g: np.ndarray):
        return (np.sign(residual) * (g[0, 0] / count),)

    return Tensor(np.array([[np.abs(residual).sum() / count]]), (predicted,), backward)


# ----------------------------------------------------------------------------
# Gradients
# ----------------------------------------------------------------------------

def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, parameters: Iterable[Tensor]) -> List[Gradient]:
    """
    Reverse-mode gradients of a scalar loss

    Args:
        loss: 1x1 tensor built from registered operations
        parameters: parameter leaves to differentiate against

    Returns:
        One Gradient per requested parameter, in request order. Parameters the
        loss does not depend on get zeros.
    """
    parameters = list(parameters)
    for p in parameters:
        if not isinstance(p, Tensor) or not p.is_parameter:
            raise UnknownParameterError(f"not a parameter leaf: {p!r}")
    if loss.shape != (1, 1):
        raise ShapeError(f"loss must be 1x1, got {loss.shape}")

    grads = {id(loss): np.ones((1, 1))}
    for node in reversed(_topological_order(loss)):
        g = grads.get(id(node))
        if g is None or node._backward is None:
            continue
        for parent, parent_grad in zip(node._parents, node._backward(g)):
            if parent_grad is None:
                continue
            key = id(parent)
            grads[key] = grads[key] + parent_grad if key in grads else parent_grad

    return [Gradient(p.name, grads.get(id(p), np.zeros_like(p.data))) for p in parameters]


def finite_difference_grad(f: Callable[[np.ndarray], float], p: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference estimate (f(p+δ) − f(p−δ)) / 2δ for every entry of p"""
    if step <= 0:
        raise ValueError("step must be positive")
    p = np.array(p, dtype=np.float64)
    grad = np.zeros_like(p)
    for index in np.ndindex(p.shape):
        original = p[index]
        p[index] = original + step
        upper = float(f(p))
        p[index] = original - step
        lower = float(f(p))
        p[index] = original
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise EvaluationError(f"f is not finite near entry {index}")
        grad[index] = (upper - lower) / (2 * step)
    return grad
