"""
Theoretical operation counts per attention variant

Each variant has a training and an inference formula in L, D, H, C, N.
Terms with sqrt(L) use ceil(sqrt(L)); halves are kept exact as rationals and
the total is rounded up once at the end.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Optional, Tuple

import pandas as pd

from ..attention.config import LSH_VARIANTS, VARIANTS, check_variant
from ..errors import ConfigurationError

PHASES = ("training", "inference")

Formula = Callable[[int, int, int, int, int, int], Fraction]


@dataclass(frozen=True)
class CostFormula:
    """Symbolic and executable form of one variant's costs"""
    training: str
    inference: str
    training_fn: Formula
    inference_fn: Formula


@dataclass(frozen=True)
class CostEstimate:
    variant: str
    phase: str
    operations: int

    def __post_init__(self):
        if self.operations < 0:
            raise ConfigurationError(f"negative operation count for {self.variant}")


def _f(value) -> Fraction:
    return Fraction(value)


_LSH_FORMULA = CostFormula(
    training="2LD+(HL+2HL²)/2+2HLC",
    inference="LD+(HL+2HL²)/2+HLC",
    training_fn=lambda L, D, H, C, N, r: _f(2 * L * D) + Fraction(H * L + 2 * H * L * L, 2) + 2 * H * L * C,
    inference_fn=lambda L, D, H, C, N, r: _f(L * D) + Fraction(H * L + 2 * H * L * L, 2) + H * L * C,
)

# r = ceil(sqrt(L)) in every lambda below
COST_FORMULAS: Dict[str, CostFormula] = {
    "baseline-qk": CostFormula(
        "4LD+2HL²", "2LD+HL²",
        lambda L, D, H, C, N, r: _f(4 * L * D + 2 * H * L * L),
        lambda L, D, H, C, N, r: _f(2 * L * D + H * L * L),
    ),
    "baseline-q": CostFormula(
        "2LD+2HL²", "LD+HL²",
        lambda L, D, H, C, N, r: _f(2 * L * D + 2 * H * L * L),
        lambda L, D, H, C, N, r: _f(L * D + H * L * L),
    ),
    "sparse-strided": CostFormula(
        "2LD+2HL√L+HL√L", "LD+HL√L+HL√L/2",
        lambda L, D, H, C, N, r: _f(2 * L * D + 2 * H * L * r + H * L * r),
        lambda L, D, H, C, N, r: _f(L * D + H * L * r) + Fraction(H * L * r, 2),
    ),
    "sparse-fixed": CostFormula(
        "2LD+HL√L+HL√L", "LD+HL√L/2+HL√L/2",
        lambda L, D, H, C, N, r: _f(2 * L * D + H * L * r + H * L * r),
        lambda L, D, H, C, N, r: _f(L * D) + Fraction(H * L * r, 2) + Fraction(H * L * r, 2),
    ),
    **{scheme: _LSH_FORMULA for scheme in LSH_VARIANTS},
    "syn-dense": CostFormula(
        "2LN+2L²", "LN+L²",
        lambda L, D, H, C, N, r: _f(2 * L * N + 2 * L * L),
        lambda L, D, H, C, N, r: _f(L * N + L * L),
    ),
    "syn-dense-mh": CostFormula(
        "2HLN+2HL²", "HLN+HL²",
        lambda L, D, H, C, N, r: _f(2 * H * L * N + 2 * H * L * L),
        lambda L, D, H, C, N, r: _f(H * L * N + H * L * L),
    ),
    "syn-random": CostFormula(
        "HL²", "−",
        lambda L, D, H, C, N, r: _f(H * L * L),
        lambda L, D, H, C, N, r: _f(0),
    ),
    "ours": CostFormula(
        "HL²", "−",
        lambda L, D, H, C, N, r: _f(H * L * L),
        lambda L, D, H, C, N, r: _f(0),
    ),
}


def _ceil_sqrt(L: int) -> int:
    return math.isqrt(L - 1) + 1


def _check_sizes(**sizes: int) -> None:
    for name, value in sizes.items():
        if not isinstance(value, int) or value < 1:
            raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")


def theoretical_cost(variant: str,
                     phase: str,
                     L: int,
                     D: int = 64,
                     H: int = 12,
                     C: int = 32,
                     N: int = 16) -> CostEstimate:
    """
    Exact operation count of one variant in one phase

    Args:
        variant: attention variant tag
        phase: "training" or "inference"
        L, D, H, C, N: sequence length, hidden size, heads, LSH candidates,
            Dense SYNTHESIZER hidden size

    Returns:
        CostEstimate; "−" entries evaluate to 0
    """
    check_variant(variant)
    if phase not in PHASES:
        raise ConfigurationError(f"phase must be one of {PHASES}, got '{phase}'")
    _check_sizes(L=L, D=D, H=H, C=C, N=N)

    formula = COST_FORMULAS[variant]
    fn = formula.training_fn if phase == "training" else formula.inference_fn
    value = fn(L, D, H, C, N, _ceil_sqrt(L))
    return CostEstimate(variant, phase, math.ceil(value))


def symbolic_cost(variant: str, phase: str) -> str:
    check_variant(variant)
    formula = COST_FORMULAS[variant]
    return formula.training if phase == "training" else formula.inference


def cost_table(L: int,
               D: int = 64,
               H: int = 12,
               C: int = 32,
               N: int = 16,
               variants: Optional[Iterable[str]] = None) -> pd.DataFrame:
    """One row per variant with both formulas and their evaluated counts"""
    rows = []
    for variant in (VARIANTS if variants is None else tuple(variants)):
        training = theoretical_cost(variant, "training", L, D, H, C, N)
        inference = theoretical_cost(variant, "inference", L, D, H, C, N)
        rows.append({
            "variant": variant,
            "training_formula": symbolic_cost(variant, "training"),
            "training_ops": training.operations,
            "inference_formula": symbolic_cost(variant, "inference"),
            "inference_ops": inference.operations,
        })
    return pd.DataFrame(rows, columns=["variant", "training_formula", "training_ops",
                                       "inference_formula", "inference_ops"])


def format_cost_table(table: pd.DataFrame, sizes: Tuple[int, int, int, int, int]) -> str:
    """Plain-text rendering with a header naming the sizes"""
    L, D, H, C, N = sizes
    header = f"Theoretical time at L={L}, D={D}, H={H}, C={C}, N={N}"
    return header + "\n" + "=" * len(header) + "\n" + table.to_string(index=False) + "\n"
