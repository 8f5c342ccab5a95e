"""
Attention-weight analysis: flattening, PCA and four-way pattern labels

Every head's L x L weights are read as one long vector. PCA places heads in a
low-dimensional space; the classifier names the pattern a head follows.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from sklearn.decomposition import PCA

from ..attention import AttentionWeights
from ..errors import PCADimensionError, ShapeError

PATTERN_LABELS = ("Diagonal", "Sparse", "Increasing", "Decreasing")
SUMMARY_ORDER = ("Diagonal", "Increasing", "Decreasing", "Sparse")

# Mean |argmax(row) - row| allowed for a Diagonal head
DIAGONAL_BAND = 2.0
# Column-mean / column-index correlation needed for a monotone head
MONOTONE_CORRELATION = 0.8
# Row-peak / row-index correlation needed before a head can be Diagonal
PEAK_TRACKING = 0.5


@dataclass(frozen=True)
class PatternLabel:
    """Classifier decision plus the score of every class"""
    label: str
    scores: Dict[str, float] = field(default_factory=dict)
    mean_offset: float = 0.0
    correlation: float = 0.0


@dataclass
class PCAProjection:
    projected: np.ndarray
    explained_variance: np.ndarray
    components: np.ndarray
    mean: np.ndarray
    model: PCA = field(repr=False, default=None)

    def reconstruct(self) -> np.ndarray:
        return self.model.inverse_transform(self.projected)


WeightsLike = Union[AttentionWeights, np.ndarray, Sequence[np.ndarray]]


def flatten_attention(weights: WeightsLike) -> np.ndarray:
    """
    Row-major flattening, one vector per head

    Accepts AttentionWeights, a (heads, L, L) stack or a list of L x L
    matrices. A 2-d array is already one vector per row and comes back as is.
    """
    if isinstance(weights, AttentionWeights):
        stack = weights.as_array()
    elif isinstance(weights, np.ndarray):
        stack = weights
    else:
        stack = np.stack([np.asarray(w, dtype=np.float64) for w in weights])

    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim == 2:
        return stack
    if stack.ndim != 3:
        raise ShapeError(f"expected heads x L x L weights, got {stack.ndim} dims")
    return stack.reshape(stack.shape[0], -1)


def pca_project(vectors: np.ndarray, out_dim: int, seed: int = 0) -> PCAProjection:
    """Project mean-centered rows onto their top `out_dim` principal components"""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2:
        raise ShapeError(f"pca_project needs a 2-d array, got {vectors.ndim} dims")
    limit = min(vectors.shape)
    if not 1 <= out_dim <= limit:
        raise PCADimensionError(f"out_dim must be in [1, {limit}] for {vectors.shape[0]} samples "
                                f"of dim {vectors.shape[1]}, got {out_dim}")

    model = PCA(n_components=out_dim, svd_solver="full", random_state=seed)
    projected = model.fit_transform(vectors)
    return PCAProjection(projected, model.explained_variance_, model.components_, model.mean_, model)


def _index_correlation(values: np.ndarray, index: Optional[np.ndarray] = None) -> float:
    index = np.arange(values.size) if index is None else index
    if values.size < 2 or np.ptp(values) == 0:
        return 0.0
    return float(np.corrcoef(index, values)[0, 1])


def classify_pattern(matrix: np.ndarray, valid_rows: Optional[np.ndarray] = None) -> PatternLabel:
    """
    Label a row-stochastic L x L weight matrix

    Diagonal when the row peaks move with the row and stay within two
    positions of the diagonal on average, Increasing / Decreasing when the
    column means correlate with the column index beyond +-0.8, Sparse
    otherwise. Scores are shifted so the winning class has the largest score;
    ties go to the earlier class.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"expected a square weight matrix, got {matrix.shape}")
    L = matrix.shape[0]
    rows = np.arange(L) if valid_rows is None else np.flatnonzero(np.asarray(valid_rows, dtype=bool))
    if rows.size == 0:
        rows = np.arange(L)

    peaks = np.argmax(matrix[rows], axis=1)
    mean_offset = float(np.mean(np.abs(peaks - rows)))
    # a lone row cannot show tracking; constant peaks (short monotone heads) never do
    tracking = 1.0 if rows.size < 2 else _index_correlation(peaks, rows)
    correlation = _index_correlation(matrix[rows].mean(axis=0))

    diagonal = min((DIAGONAL_BAND - mean_offset) / DIAGONAL_BAND,
                   (tracking - PEAK_TRACKING) / (1.0 - PEAK_TRACKING))
    increasing = (correlation - MONOTONE_CORRELATION) / (1.0 - MONOTONE_CORRELATION)
    decreasing = (-correlation - MONOTONE_CORRELATION) / (1.0 - MONOTONE_CORRELATION)
    scores = {
        "Diagonal": diagonal if diagonal < 0 else 1.0 + diagonal,
        "Sparse": 0.0,
        "Increasing": increasing,
        "Decreasing": decreasing,
    }
    label = max(scores, key=scores.get)
    return PatternLabel(label, scores, mean_offset, correlation)


def classify_heads(maps: np.ndarray) -> List[PatternLabel]:
    """Labels for a (heads, L, L) stack"""
    maps = np.asarray(maps, dtype=np.float64)
    if maps.ndim != 3:
        raise ShapeError(f"expected heads x L x L maps, got {maps.ndim} dims")
    return [classify_pattern(m) for m in maps]


def pattern_summary(labels: Sequence[PatternLabel]) -> str:
    counts = {name: 0 for name in SUMMARY_ORDER}
    for label in labels:
        counts[label.label] += 1
    return ", ".join(f"{counts[name]} {name}" for name in SUMMARY_ORDER)


def pattern_report(labels: Sequence[PatternLabel], title: str = "Attention patterns") -> str:
    """Plain-text table of head labels and diagnostics, summary line last"""
    frame = pd.DataFrame({
        "head": np.arange(1, len(labels) + 1),
        "label": [p.label for p in labels],
        "mean_offset": [round(p.mean_offset, 4) for p in labels],
        "correlation": [round(p.correlation, 4) for p in labels],
    })
    lines = [title, "=" * len(title), frame.to_string(index=False), "", pattern_summary(labels)]
    return "\n".join(lines) + "\n"


def write_embedding_csv(projected: np.ndarray, path: Path) -> Path:
    """head,x,y rows; y is 0 for a one-dimensional projection"""
    projected = np.asarray(projected, dtype=np.float64)
    if projected.ndim != 2:
        raise ShapeError(f"expected heads x dims, got {projected.ndim} dims")
    y = projected[:, 1] if projected.shape[1] > 1 else np.zeros(projected.shape[0])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"head": np.arange(1, projected.shape[0] + 1), "x": projected[:, 0], "y": y}) \
        .to_csv(path, index=False)
    return path
