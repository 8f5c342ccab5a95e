"""
SYNTHESIZER attention and the fixed-pattern initialization

Dense: a per-token two-layer MLP produces each row of attention logits.
Random: the logits are free parameters shared by every input.
Fixed-init: Random SYNTHESIZER whose logits start from twelve hand-made heads
(five shifted diagonals, one increasing, one decreasing, five small-noise).

Logits are the stored parameterization; the forward pass always applies a row
softmax. Values keep their own projection.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core import Tensor, concat_cols, linear_forward, matmul, relu, row_softmax, slice_block
from ..errors import ConfigurationError, PatternError, SequenceLengthError, ShapeError
from ..seeding import derive_seed
from .baseline import AttentionWeights
from .config import AttentionConfig

WEIGHT_SOURCES = ("dense", "dense-multihead", "random", "fixed-init")

PATTERN_KINDS = ("diagonal", "increasing", "decreasing", "sparse-random")
DIAGONAL_SHIFTS = (0, -1, -2, 1, 2)

DIAGONAL_SHARPNESS = 5.0
MONOTONE_SPAN = 3.0
SPARSE_NOISE_SCALE = 0.02

# Head split of the twelve-head initialization: diagonal, increasing, decreasing, sparse
FIXED_INIT_SPLIT = (5, 1, 1, 5)


@dataclass
class DenseSynthWeights:
    """F(X) = W2 relu(W1 X + b1) + b2 with W1: D x N, W2: N x L_max"""
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    def __post_init__(self):
        if self.b1.shape != (1, self.w1.cols) or self.w2.rows != self.w1.cols or self.b2.shape != (1, self.w2.cols):
            raise ShapeError("inconsistent Dense SYNTHESIZER weight shapes")

    @property
    def max_length(self) -> int:
        return self.w2.cols

    def parameters(self) -> List[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]


def init_dense_synth(D: int, N: int, L_max: int, rng: np.random.Generator, prefix: str = "") -> DenseSynthWeights:
    return DenseSynthWeights(
        w1=Tensor.parameter(rng.normal(0.0, 1.0 / np.sqrt(D), (D, N)), f"{prefix}w1"),
        b1=Tensor.parameter(np.zeros((1, N)), f"{prefix}b1"),
        w2=Tensor.parameter(rng.normal(0.0, 1.0 / np.sqrt(N), (N, L_max)), f"{prefix}w2"),
        b2=Tensor.parameter(np.zeros((1, L_max)), f"{prefix}b2"),
    )


@dataclass
class RandomSynthLogits:
    """
    Per-head L_max x L_max learnable logits, identical for every input

    After freeze() the post-softmax weights are cached per length and served
    as constants, so inference does no weight computation at all.
    """
    heads: List[Tensor]
    frozen: bool = False
    _frozen_weights: Dict[int, List[Tensor]] = field(default_factory=dict, repr=False)

    @property
    def max_length(self) -> int:
        return self.heads[0].rows

    def parameters(self) -> List[Tensor]:
        return list(self.heads)

    def freeze(self) -> None:
        self.frozen = True
        self._frozen_weights.clear()

    def unfreeze(self) -> None:
        self.frozen = False
        self._frozen_weights.clear()

    def frozen_weights(self, L: int) -> List[Tensor]:
        if L not in self._frozen_weights:
            self._frozen_weights[L] = [Tensor.constant(row_softmax(h).data)
                                       for h in random_synth_weights(self, L)]
        return self._frozen_weights[L]


@dataclass(frozen=True)
class PatternSpec:
    """
    One hand-made head pattern

    kind: diagonal | increasing | decreasing | sparse-random
    shift: diagonal offset in {-2, -1, 0, +1, +2}
    sharpness: diagonal peak logit, or the logit span of the monotone kinds
    noise_scale: std of the sparse-random logits
    """
    kind: str
    shift: int = 0
    sharpness: float = DIAGONAL_SHARPNESS
    noise_scale: float = SPARSE_NOISE_SCALE

    def __post_init__(self):
        if self.kind not in PATTERN_KINDS:
            raise PatternError(f"unknown pattern kind '{self.kind}'")
        if self.shift not in DIAGONAL_SHIFTS:
            raise PatternError(f"shift must be in {sorted(DIAGONAL_SHIFTS)}, got {self.shift}")
        if self.sharpness <= 0:
            raise PatternError(f"sharpness must be positive, got {self.sharpness}")
        if self.noise_scale < 0:
            raise PatternError(f"noise_scale must be non-negative, got {self.noise_scale}")

    @classmethod
    def diagonal(cls, shift: int = 0, sharpness: float = DIAGONAL_SHARPNESS) -> "PatternSpec":
        return cls("diagonal", shift=shift, sharpness=sharpness)

    @classmethod
    def increasing(cls, span: float = MONOTONE_SPAN) -> "PatternSpec":
        return cls("increasing", sharpness=span)

    @classmethod
    def decreasing(cls, span: float = MONOTONE_SPAN) -> "PatternSpec":
        return cls("decreasing", sharpness=span)

    @classmethod
    def sparse(cls, noise_scale: float = SPARSE_NOISE_SCALE) -> "PatternSpec":
        return cls("sparse-random", noise_scale=noise_scale)


@dataclass
class SynthWeightSource:
    """Where synthesizer_forward gets its logits from"""
    kind: str
    dense: Sequence[DenseSynthWeights] = ()
    logits: Optional[RandomSynthLogits] = None

    def __post_init__(self):
        if self.kind not in WEIGHT_SOURCES:
            raise ConfigurationError(f"unknown weight source '{self.kind}'")
        if self.kind.startswith("dense") and not self.dense:
            raise ConfigurationError(f"weight source '{self.kind}' needs Dense SYNTHESIZER weights")
        if self.kind == "dense" and len(self.dense) != 1:
            raise ConfigurationError("single-head Dense SYNTHESIZER takes exactly one weight set")
        if self.kind in ("random", "fixed-init") and self.logits is None:
            raise ConfigurationError(f"weight source '{self.kind}' needs logits")

    @property
    def heads(self) -> int:
        return len(self.dense) if self.kind.startswith("dense") else len(self.logits.heads)

    def parameters(self) -> List[Tensor]:
        if self.kind.startswith("dense"):
            return [p for weights in self.dense for p in weights.parameters()]
        return self.logits.parameters()


def dense_synth_weights(x: Tensor, w: DenseSynthWeights) -> Tensor:
    """Row-local logits F(x), cut to L x L"""
    L = x.rows
    if L > w.max_length:
        raise SequenceLengthError(f"sequence length {L} exceeds L_max={w.max_length}")
    hidden = relu(linear_forward(x, w.w1, w.b1))
    return slice_block(linear_forward(hidden, w.w2, w.b2), L, L)


def random_synth_weights(logits: RandomSynthLogits, L: int) -> List[Tensor]:
    """Top-left L x L slice of every head's logits"""
    if L > logits.max_length:
        raise SequenceLengthError(f"sequence length {L} exceeds L_max={logits.max_length}")
    return [slice_block(h, L, L) for h in logits.heads]


def synthesizer_forward(x: Tensor,
                        value_weights: Sequence[Tensor],
                        cfg: AttentionConfig,
                        weight_source: SynthWeightSource) -> Tuple[Tensor, AttentionWeights]:
    """Per head row_softmax(logits) V with V = x W_V, heads concatenated"""
    if len(value_weights) != weight_source.heads:
        raise ShapeError(f"{weight_source.heads} heads but {len(value_weights)} value projections")
    L = x.rows
    if L > cfg.max_length:
        raise SequenceLengthError(f"sequence length {L} exceeds L_max={cfg.max_length}")

    if weight_source.kind.startswith("dense"):
        weights = [row_softmax(dense_synth_weights(x, w)) for w in weight_source.dense]
    elif weight_source.logits.frozen:
        weights = weight_source.logits.frozen_weights(L)
    else:
        weights = [row_softmax(h) for h in random_synth_weights(weight_source.logits, L)]

    outputs = [matmul(a, matmul(x, w_v)) for a, w_v in zip(weights, value_weights)]
    return concat_cols(outputs), AttentionWeights(list(weights))


def make_pattern(spec: PatternSpec, L: int, seed: int = 0) -> np.ndarray:
    """L x L logits for one hand-made head"""
    if L < 1:
        raise PatternError(f"L must be >= 1, got {L}")

    if spec.kind == "diagonal":
        if spec.shift != 0 and L < 3:
            raise PatternError(f"shifted diagonals need L >= 3, got {L}")
        logits = np.zeros((L, L))
        rows = np.arange(L)
        logits[rows, np.clip(rows + spec.shift, 0, L - 1)] = spec.sharpness
        return logits

    if spec.kind in ("increasing", "decreasing"):
        ramp = np.linspace(0.0, spec.sharpness, L)
        if spec.kind == "decreasing":
            ramp = ramp[::-1]
        return np.tile(ramp, (L, 1))

    return np.random.default_rng(seed).normal(0.0, spec.noise_scale, size=(L, L))


def fixed_init_head_counts(H: int, proportional: bool = False) -> Tuple[int, int, int, int]:
    """
    (diagonal, increasing, decreasing, sparse) head counts

    Twelve heads use the 5/1/1/5 split. Other head counts need
    proportional=True and get the largest-remainder share of that split.
    """
    total = sum(FIXED_INIT_SPLIT)
    if H == total:
        return FIXED_INIT_SPLIT
    if not proportional:
        raise ConfigurationError(f"fixed-init expects {total} heads, got {H} (enable proportional heads)")
    if H < 1:
        raise ConfigurationError(f"H must be >= 1, got {H}")
    shares = [H * n / total for n in FIXED_INIT_SPLIT]
    counts = [int(s) for s in shares]
    by_remainder = sorted(range(4), key=lambda i: (-(shares[i] - counts[i]), i))
    for i in by_remainder[:H - sum(counts)]:
        counts[i] += 1
    return tuple(counts)


def fixed_init_patterns(H: int = 12, proportional: bool = False) -> List[PatternSpec]:
    n_diag, n_inc, n_dec, n_sparse = fixed_init_head_counts(H, proportional)
    specs = [PatternSpec.diagonal(DIAGONAL_SHIFTS[i % len(DIAGONAL_SHIFTS)]) for i in range(n_diag)]
    specs += [PatternSpec.increasing() for _ in range(n_inc)]
    specs += [PatternSpec.decreasing() for _ in range(n_dec)]
    specs += [PatternSpec.sparse() for _ in range(n_sparse)]
    return specs


def build_fixed_init(H: int = 12,
                     L: int = 128,
                     seed: int = 0,
                     proportional: bool = False,
                     prefix: str = "") -> RandomSynthLogits:
    """
    Random SYNTHESIZER logits initialized with the fixed head patterns

    Heads 1-5 are diagonals shifted by 0, -1, -2, +1, +2, head 6 increases,
    head 7 decreases and heads 8-12 are small noise with distinct seeds.
    """
    heads = []
    for index, spec in enumerate(fixed_init_patterns(H, proportional)):
        head_seed = derive_seed(seed, "fixed-init", index)
        heads.append(Tensor.parameter(make_pattern(spec, L, head_seed), f"{prefix}logits.h{index}"))
    return RandomSynthLogits(heads)


def init_random_logits(H: int, L: int, rng: np.random.Generator, prefix: str = "") -> RandomSynthLogits:
    return RandomSynthLogits([Tensor.parameter(rng.standard_normal((L, L)), f"{prefix}logits.h{h}")
                              for h in range(H)])


def write_pattern_csv(matrix: np.ndarray, path: Path) -> Path:
    """Write an L x L grid as CSV (row index plus one column per key)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(np.asarray(matrix), columns=[f"k{j}" for j in range(np.asarray(matrix).shape[1])])
    frame.to_csv(path, index_label="q")
    return path
