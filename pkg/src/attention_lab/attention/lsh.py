"""
LSH / ALSH candidate selection for attention

Five schemes pick, for every query, the C keys whose signed projection on one
random Gaussian direction is largest. Each scheme normalizes queries and keys,
then augments them with extra coordinates (S for queries, R for keys) so that
the projection ranks keys by inner product. Attention arithmetic itself still
uses the raw q . k; hashing only decides which keys take part.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core import Tensor
from ..errors import (
    ConfigurationError,
    NormBoundError,
    ShapeError,
    UndefinedScaleError,
    ZeroNormError,
)
from .baseline import AttentionWeights, ProjectionWeights, attend, project_qkv
from .config import ASYMMETRIC_VARIANTS, LSH_VARIANTS, AttentionConfig

SCHEMES = LSH_VARIANTS
ASYMMETRIC_SCHEMES = ASYMMETRIC_VARIANTS

# Relative slack for norm bounds that hold exactly in real arithmetic
_NORM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TransformSpec:
    """
    Scheme selector plus its normalization state

    M is the max key norm; normalize_inputs fills it in for the current batch.
    """
    scheme: str
    U: float = 0.75
    m: int = 2
    M: Optional[float] = None
    qnf_zero_fallback: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown LSH scheme '{self.scheme}'")
        if not 0 < self.U <= 1:
            raise ConfigurationError(f"U must be in (0, 1], got {self.U}")
        if self.m < 1:
            raise ConfigurationError(f"m must be >= 1, got {self.m}")

    @classmethod
    def for_config(cls, cfg: AttentionConfig) -> "TransformSpec":
        return cls(scheme=cfg.variant, U=cfg.U, m=cfg.m)

    def require_M(self) -> float:
        if self.M is None:
            raise ConfigurationError(f"{self.scheme}: M is not set, run normalize_inputs first")
        return self.M


@dataclass(frozen=True)
class HashDirection:
    """Random direction a with a_i ~ N(0, 1) in the transformed space"""
    values: np.ndarray

    @classmethod
    def draw(cls, dim: int, rng: np.random.Generator) -> "HashDirection":
        return cls(rng.standard_normal(dim))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CandidateSet:
    """Per query, the sorted indices of the min(C, L) selected keys"""
    indices: np.ndarray

    @property
    def size(self) -> int:
        return self.indices.shape[1]

    def to_mask(self, L: int) -> np.ndarray:
        mask = np.zeros((self.indices.shape[0], L), dtype=bool)
        np.put_along_axis(mask, self.indices, True, axis=1)
        return mask

    def dump(self) -> str:
        """One line per query, comma-separated key indices"""
        return "".join(",".join(str(j) for j in row) + "\n" for row in self.indices)


def transformed_dim(dim: int, spec: TransformSpec) -> int:
    extra = {"sign-alsh": spec.m, "simple-alsh": 2}.get(spec.scheme, 1)
    return dim + extra


def _as_rows(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    array = np.asarray(x, dtype=np.float64)
    if array.ndim == 1:
        return array[None, :], True
    if array.ndim != 2:
        raise ShapeError(f"expected a vector or a matrix of row vectors, got {array.ndim} dims")
    return array, False


def _restore(rows: np.ndarray, was_vector: bool) -> np.ndarray:
    return rows[0] if was_vector else rows


def _sqrt_gap(bound_sq: float, rows: np.ndarray) -> np.ndarray:
    """sqrt(bound^2 - ||x||^2) per row, rejecting norms above the bound"""
    gap = bound_sq - np.einsum("ij,ij->i", rows, rows)
    if np.any(gap < -_NORM_TOLERANCE * max(bound_sq, 1.0)):
        raise NormBoundError(f"vector norm exceeds bound {np.sqrt(bound_sq):.6g}")
    return np.sqrt(np.clip(gap, 0.0, None))[:, None]


def transform_query(q: np.ndarray, spec: TransformSpec) -> np.ndarray:
    """S(q) for the scheme; accepts one vector or a matrix of rows"""
    rows, was_vector = _as_rows(q)
    zeros = np.zeros((rows.shape[0], 1))
    scheme = spec.scheme

    if scheme == "sign-alsh":
        out = np.hstack([rows, np.zeros((rows.shape[0], spec.m))])
    elif scheme == "xbox":
        out = np.hstack([rows, zeros])
    elif scheme == "xbox-qnf":
        norms = np.linalg.norm(rows, axis=1)
        silent = norms == 0
        if silent.any() and not spec.qnf_zero_fallback:
            raise UndefinedScaleError("QNF scale M/||q|| is undefined for a zero query")
        lam = np.where(silent, 1.0, spec.require_M() / np.where(silent, 1.0, norms))
        out = np.hstack([lam[:, None] * rows, zeros])
    elif scheme == "simple-lsh":
        out = np.hstack([rows, _sqrt_gap(1.0, rows)])
    else:
        out = np.hstack([rows, zeros, _sqrt_gap(1.0, rows)])
    return _restore(out, was_vector)


def transform_key(k: np.ndarray, spec: TransformSpec) -> np.ndarray:
    """R(k) for the asymmetric schemes, S(k) for Simple LSH"""
    rows, was_vector = _as_rows(k)
    scheme = spec.scheme

    if scheme == "sign-alsh":
        sq_norms = np.einsum("ij,ij->i", rows, rows)
        if np.any(sq_norms > 1.0 + _NORM_TOLERANCE):
            raise NormBoundError("Sign-ALSH keys must lie in the unit ball after scaling")
        terms = [0.5 - sq_norms ** (2 ** i) for i in range(spec.m)]
        out = np.hstack([rows, np.stack(terms, axis=1)])
    elif scheme in ("xbox", "xbox-qnf"):
        M = spec.require_M()
        out = np.hstack([rows, _sqrt_gap(M * M, rows)])
    elif scheme == "simple-lsh":
        out = np.hstack([rows, _sqrt_gap(1.0, rows)])
    else:
        out = np.hstack([rows, _sqrt_gap(1.0, rows), np.zeros((rows.shape[0], 1))])
    return _restore(out, was_vector)


def normalize_inputs(queries: np.ndarray,
                     keys: np.ndarray,
                     spec: TransformSpec) -> Tuple[np.ndarray, np.ndarray, TransformSpec]:
    """
    Scheme-specific normalization T

    sign-alsh: keys scaled by U/M, queries to unit norm
    simple-lsh / simple-alsh: queries and keys scaled by 1/M
    xbox / xbox-qnf: unchanged, M recorded

    Returns:
        (queries', keys', spec with M set)
    """
    queries, _ = _as_rows(queries)
    keys, _ = _as_rows(keys)
    if keys.shape[0] == 0:
        raise ShapeError("normalize_inputs needs at least one key")
    if queries.shape[1] != keys.shape[1]:
        raise ShapeError(f"query dim {queries.shape[1]} != key dim {keys.shape[1]}")

    key_max = float(np.linalg.norm(keys, axis=1).max())
    if key_max == 0.0:
        raise ZeroNormError("all keys are zero, max norm M is 0")

    if spec.scheme == "sign-alsh":
        norms = np.linalg.norm(queries, axis=1, keepdims=True)
        unit_queries = queries / np.where(norms == 0, 1.0, norms)
        return unit_queries, keys * (spec.U / key_max), replace(spec, M=key_max)

    if spec.scheme in ("simple-lsh", "simple-alsh"):
        M = max(key_max, float(np.linalg.norm(queries, axis=1).max(initial=0.0)))
        return queries / M, keys / M, replace(spec, M=M)

    return queries.copy(), keys.copy(), replace(spec, M=key_max)


def sign_hash(a: HashDirection, x: np.ndarray) -> int:
    """+1 if a^T x >= 0 else -1"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != a.values.shape:
        raise ShapeError(f"hash direction dim {a.dim} != vector dim {x.shape}")
    return 1 if float(a.values @ x) >= 0 else -1


def select_candidates(queries: np.ndarray,
                      keys: np.ndarray,
                      spec: TransformSpec,
                      a: HashDirection,
                      C: int) -> CandidateSet:
    """
    Top-C keys per query by sign(a^T S(q)) * a^T R(k)

    Ties go to the lower key index.
    """
    if C < 1:
        raise ConfigurationError(f"C must be >= 1, got {C}")
    q_norm, k_norm, spec = normalize_inputs(queries, keys, spec)
    s_q = transform_query(q_norm, spec)
    r_k = transform_key(k_norm, spec)
    if s_q.shape[1] != a.dim:
        raise ShapeError(f"hash direction dim {a.dim} != transformed dim {s_q.shape[1]}")

    query_signs = np.where(s_q @ a.values >= 0, 1.0, -1.0)
    scores = query_signs[:, None] * (r_k @ a.values)[None, :]
    top = min(C, k_norm.shape[0])
    order = np.argsort(-scores, axis=1, kind="stable")[:, :top]
    return CandidateSet(np.sort(order, axis=1))


def _lowest_indices(queries: int, keys: int, C: int) -> CandidateSet:
    return CandidateSet(np.tile(np.arange(min(C, keys)), (queries, 1)))


def lsh_attention_forward(x: Tensor,
                          w: ProjectionWeights,
                          cfg: AttentionConfig,
                          spec: TransformSpec,
                          directions: Sequence[HashDirection]) -> Tuple[Tensor, AttentionWeights]:
    """
    Attention restricted to the per-head candidate sets

    Candidate selection is a constant of the forward pass; gradients flow only
    through the scores of the selected pairs. A head whose keys are all zero
    ties every score, so it keeps the lowest min(C, L) key indices.
    """
    if cfg.variant != spec.scheme:
        raise ConfigurationError(f"config variant '{cfg.variant}' vs scheme '{spec.scheme}'")
    if len(directions) != w.heads:
        raise ShapeError(f"need one hash direction per head ({w.heads}), got {len(directions)}")
    triples = project_qkv(x, w)
    masks = []
    for (q, k, _), a in zip(triples, directions):
        if k.data.any():
            candidates = select_candidates(q.data, k.data, spec, a, cfg.C)
        else:
            candidates = _lowest_indices(q.rows, k.rows, cfg.C)
        masks.append(candidates.to_mask(k.rows))
    return attend(triples, masks)


def brute_force_mips(queries: np.ndarray, keys: np.ndarray, top: int) -> np.ndarray:
    """Exact top-`top` keys by q . k per query, best first, ties to the lower index"""
    queries, _ = _as_rows(queries)
    keys, _ = _as_rows(keys)
    if not 1 <= top <= keys.shape[0]:
        raise ConfigurationError(f"top must be in [1, {keys.shape[0]}], got {top}")
    scores = queries @ keys.T
    return np.argsort(-scores, axis=1, kind="stable")[:, :top]


def recall_at_c(candidates: CandidateSet, exact_top1: np.ndarray) -> float:
    """Fraction of queries whose exact best key is among the candidates"""
    exact = np.asarray(exact_top1).reshape(-1)
    hits = (candidates.indices == exact[:, None]).any(axis=1)
    return float(hits.mean())


def draw_directions(head_dim: int, spec: TransformSpec, heads: int, rng: np.random.Generator) -> List[HashDirection]:
    dim = transformed_dim(head_dim, spec)
    return [HashDirection.draw(dim, rng) for _ in range(heads)]
