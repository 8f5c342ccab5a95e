"""
Attention configuration and variant tags
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

from ..errors import ConfigurationError, UnknownVariantError

VARIANTS = (
    "baseline-qk",
    "baseline-q",
    "sparse-strided",
    "sparse-fixed",
    "sign-alsh",
    "xbox",
    "xbox-qnf",
    "simple-lsh",
    "simple-alsh",
    "syn-dense",
    "syn-dense-mh",
    "syn-random",
    "ours",
)

BASELINE_VARIANTS = ("baseline-qk", "baseline-q")
SPARSE_VARIANTS = ("sparse-strided", "sparse-fixed")
LSH_VARIANTS = ("sign-alsh", "xbox", "xbox-qnf", "simple-lsh", "simple-alsh")
ASYMMETRIC_VARIANTS = ("sign-alsh", "xbox", "xbox-qnf", "simple-alsh")
SYNTHESIZER_VARIANTS = ("syn-dense", "syn-dense-mh", "syn-random", "ours")

# Variants whose attention weights do not depend on the input
INPUT_INDEPENDENT_VARIANTS = ("syn-random", "ours")


def check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise UnknownVariantError(f"Unknown variant '{variant}' (known: {', '.join(VARIANTS)})")
    return variant


@dataclass(frozen=True)
class AttentionConfig:
    """
    Shape and hyperparameters of one attention layer

    Args:
        L: sequence length
        D: model hidden dimension
        H: number of heads; head_dim is D // H
        variant: one of VARIANTS
        C: keys kept per query by the LSH variants
        N: hidden size of the Dense synthesizer
        U: Sign-ALSH key scaling
        m: Sign-ALSH number of appended norm terms
        stride: sparse stride / block size, defaults to ceil(sqrt(L))
        summary_width: summary columns per block for the fixed mask
        L_max: synthesizer weight size, defaults to L
        layers: encoder depth
        proportional_heads: allow H != 12 for the fixed-init pattern split
    """
    L: int = 128
    D: int = 64
    H: int = 12
    variant: str = "baseline-qk"
    C: int = 32
    N: int = 16
    U: float = 0.75
    m: int = 2
    stride: Optional[int] = None
    summary_width: int = 1
    L_max: Optional[int] = None
    layers: int = 6
    proportional_heads: bool = False

    def __post_init__(self):
        check_variant(self.variant)
        if self.L < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        if not 1 <= self.H <= self.D:
            raise ConfigurationError(f"need 1 <= H <= D, got H={self.H}, D={self.D}")
        if not 1 <= self.C:
            raise ConfigurationError(f"C must be >= 1, got {self.C}")
        if self.N < 1:
            raise ConfigurationError(f"N must be >= 1, got {self.N}")
        if not 0 < self.U <= 1:
            raise ConfigurationError(f"U must be in (0, 1], got {self.U}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")
        if self.layers < 1:
            raise ConfigurationError(f"layers must be >= 1, got {self.layers}")
        if self.L_max is not None and self.L_max < self.L:
            raise ConfigurationError(f"L_max={self.L_max} is smaller than L={self.L}")

    @property
    def head_dim(self) -> int:
        return self.D // self.H

    @property
    def effective_C(self) -> int:
        return min(self.C, self.L)

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else math.isqrt(self.L - 1) + 1

    @property
    def max_length(self) -> int:
        return self.L_max if self.L_max is not None else self.L

    def with_variant(self, variant: str) -> "AttentionConfig":
        return replace(self, variant=variant)
