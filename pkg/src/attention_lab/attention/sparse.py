"""
Sparse attention with crafted strided and fixed masks

Masks are bidirectional (encoder) versions of the strided and fixed layouts.
Half of the heads use pattern-one (local window / own block), the other half
pattern-two (strided columns / block summary columns). The forward pass is
computed dense and then masked; the cost model tracks the theoretical saving.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..core import Tensor
from ..errors import MaskParameterError
from .baseline import AttentionWeights, ProjectionWeights, attend, project_qkv
from .config import AttentionConfig

PATTERN_ONE = "pattern-one"
PATTERN_TWO = "pattern-two"
HEAD_PATTERNS = (PATTERN_ONE, PATTERN_TWO)


@dataclass(frozen=True)
class AttentionMask:
    """L x L boolean matrix of permitted query -> key pairs"""
    allowed: np.ndarray
    head_pattern: str = PATTERN_ONE

    def __post_init__(self):
        allowed = np.asarray(self.allowed, dtype=bool)
        if allowed.ndim != 2 or allowed.shape[0] != allowed.shape[1]:
            raise MaskParameterError(f"mask must be square, got {allowed.shape}")
        if not allowed.any(axis=1).all():
            raise MaskParameterError("every mask row needs at least one permitted key")
        allowed.setflags(write=False)
        object.__setattr__(self, "allowed", allowed)

    @property
    def length(self) -> int:
        return self.allowed.shape[0]

    def row_counts(self) -> np.ndarray:
        return self.allowed.sum(axis=1)

    def to_bitmap(self) -> str:
        """Rows of 0/1 characters, one line per query"""
        return "\n".join("".join("1" if v else "0" for v in row) for row in self.allowed) + "\n"


def mask_from_bitmap(text: str, head_pattern: str = PATTERN_ONE) -> AttentionMask:
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    return AttentionMask(np.array([[c == "1" for c in row] for row in rows]), head_pattern)


def _check_pattern(head_pattern: str) -> None:
    if head_pattern not in HEAD_PATTERNS:
        raise MaskParameterError(f"unknown head pattern '{head_pattern}'")


def strided_mask(L: int, stride: int, head_pattern: str) -> AttentionMask:
    """
    Strided layout

    pattern-one: local window |i - j| < stride
    pattern-two: strided positions (i - j) mod stride == 0; a stride of 1 keeps
    only the diagonal, like pattern-one
    """
    _check_pattern(head_pattern)
    if not 1 <= stride <= L:
        raise MaskParameterError(f"stride must be in [1, {L}], got {stride}")
    i, j = np.indices((L, L))
    if head_pattern == PATTERN_ONE:
        allowed = np.abs(i - j) < stride
    elif stride == 1:
        allowed = i == j
    else:
        allowed = (i - j) % stride == 0
    return AttentionMask(allowed, head_pattern)


def fixed_mask(L: int, block: int, summary_width: int, head_pattern: str) -> AttentionMask:
    """
    Fixed layout

    pattern-one: the block containing i
    pattern-two: the last `summary_width` columns of every block
    """
    _check_pattern(head_pattern)
    if not 1 <= block <= L:
        raise MaskParameterError(f"block must be in [1, {L}], got {block}")
    if not 1 <= summary_width <= block:
        raise MaskParameterError(f"summary_width must be in [1, {block}], got {summary_width}")
    i, j = np.indices((L, L))
    if head_pattern == PATTERN_ONE:
        allowed = i // block == j // block
    else:
        allowed = j % block >= block - summary_width
    return AttentionMask(allowed, head_pattern)


def head_pattern_for(head: int, heads: int) -> str:
    """First half of the heads get pattern-one, the rest pattern-two"""
    return PATTERN_ONE if head < heads // 2 else PATTERN_TWO


def default_head_masks(cfg: AttentionConfig, L: Optional[int] = None) -> List[AttentionMask]:
    """Per-head masks for a sparse variant at its default stride/block"""
    L = cfg.L if L is None else L
    stride = min(cfg.stride or math.isqrt(L - 1) + 1, L)
    masks = []
    for head in range(cfg.H):
        pattern = head_pattern_for(head, cfg.H)
        if cfg.variant == "sparse-fixed":
            masks.append(fixed_mask(L, stride, min(cfg.summary_width, stride), pattern))
        else:
            masks.append(strided_mask(L, stride, pattern))
    return masks


def sparse_attention_forward(x: Tensor,
                             w: ProjectionWeights,
                             cfg: AttentionConfig,
                             masks: List[AttentionMask]) -> Tuple[Tensor, AttentionWeights]:
    """Per head masked_row_softmax(scaled scores) V, heads concatenated"""
    if len(masks) != w.heads:
        raise MaskParameterError(f"need one mask per head ({w.heads}), got {len(masks)}")
    return attend(project_qkv(x, w), [m.allowed for m in masks])
