"""
Full multi-head self-attention and its shared-QK variant

Both baselines compute per head softmax(Q K^T / sqrt(head_dim)) V and
concatenate the heads along the feature axis. Position information is the
caller's concern; nothing here looks at row order.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core import Tensor, concat_cols, masked_row_softmax, matmul, row_softmax, scale, transpose
from ..errors import ConfigurationError, ShapeError
from .config import AttentionConfig

QKV = Tuple[Tensor, Tensor, Tensor]


@dataclass
class ProjectionWeights:
    """Per-head query/key/value projections (each D x head_dim)"""
    w_q: List[Tensor]
    w_k: List[Tensor]
    w_v: List[Tensor]
    shared_qk: bool = False

    def __post_init__(self):
        if not len(self.w_q) == len(self.w_k) == len(self.w_v):
            raise ShapeError("projection lists must have one entry per head")
        if self.shared_qk and any(q is not k for q, k in zip(self.w_q, self.w_k)):
            raise ShapeError("shared_qk requires W_Q and W_K to be the same tensors")

    @property
    def heads(self) -> int:
        return len(self.w_q)

    def parameters(self) -> List[Tensor]:
        params = list(self.w_q)
        if not self.shared_qk:
            params += self.w_k
        return params + list(self.w_v)


@dataclass
class AttentionWeights:
    """Per-head L x L attention weight matrices"""
    heads: List[Tensor]

    def as_array(self) -> np.ndarray:
        """Stacked (H, L, L) copy of the weights"""
        return np.stack([h.data for h in self.heads])


def init_projection_weights(cfg: AttentionConfig,
                            rng: np.random.Generator,
                            shared_qk: bool = False,
                            prefix: str = "") -> ProjectionWeights:
    std = 1.0 / math.sqrt(cfg.D)

    def draw(kind: str, head: int) -> Tensor:
        values = rng.normal(0.0, std, size=(cfg.D, cfg.head_dim))
        return Tensor.parameter(values, f"{prefix}{kind}.h{head}")

    w_q = [draw("wq", h) for h in range(cfg.H)]
    w_k = list(w_q) if shared_qk else [draw("wk", h) for h in range(cfg.H)]
    w_v = [draw("wv", h) for h in range(cfg.H)]
    return ProjectionWeights(w_q, w_k, w_v, shared_qk=shared_qk)


def project_qkv(x: Tensor, w: ProjectionWeights) -> List[QKV]:
    """Project x (L x D) into one (Q, K, V) triple per head"""
    if x.cols != w.w_q[0].rows:
        raise ShapeError(f"input has {x.cols} features, projections expect {w.w_q[0].rows}")
    triples = []
    for w_q, w_k, w_v in zip(w.w_q, w.w_k, w.w_v):
        q = matmul(x, w_q)
        k = q if w.shared_qk else matmul(x, w_k)
        triples.append((q, k, matmul(x, w_v)))
    return triples


def scaled_scores(q: Tensor, k: Tensor) -> Tensor:
    """A[i, j] = q_i . k_j / sqrt(head_dim)"""
    if q.shape != k.shape:
        raise ShapeError(f"Q {q.shape} and K {k.shape} differ")
    return scale(matmul(q, transpose(k)), 1.0 / math.sqrt(q.cols))


def attend(triples: List[QKV], masks: Optional[List[np.ndarray]] = None) -> Tuple[Tensor, AttentionWeights]:
    """Softmax (optionally masked) of the scaled scores times V, heads concatenated"""
    outputs, weights = [], []
    for head, (q, k, v) in enumerate(triples):
        scores = scaled_scores(q, k)
        a = row_softmax(scores) if masks is None else masked_row_softmax(scores, masks[head])
        weights.append(a)
        outputs.append(matmul(a, v))
    return concat_cols(outputs), AttentionWeights(weights)


def full_attention_forward(x: Tensor,
                           w: ProjectionWeights,
                           cfg: AttentionConfig) -> Tuple[Tensor, AttentionWeights]:
    """
    Multi-head attention of the two baselines

    Returns:
        (L x H*head_dim output, per-head weights)
    """
    if cfg.variant not in ("baseline-qk", "baseline-q"):
        raise ConfigurationError(f"full attention does not implement variant '{cfg.variant}'")
    return attend(project_qkv(x, w))
