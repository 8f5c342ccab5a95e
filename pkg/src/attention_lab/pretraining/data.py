"""
Synthetic audio-like frames and Masked Audio Model masking

Frames are sums of a few slow sinusoids shared across channels plus fixed
per-channel offsets and white noise, a stationary signal that masked
reconstruction can learn at desk scale.
"""

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import MaskParameterError, ShapeError
from ..seeding import make_rng


class MaskingWarning(UserWarning):
    """Mask ratio too small to place a single masked frame"""


@dataclass(frozen=True)
class SequenceBatch:
    """
    B x L x D frames with a B x L mask (True = masked)

    `targets` holds the unmasked frames once mam_mask has zeroed chunks.
    """
    frames: np.ndarray
    mask: Optional[np.ndarray] = None
    targets: Optional[np.ndarray] = None

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3:
            raise ShapeError(f"frames must be B x L x D, got shape {frames.shape}")
        if not np.isfinite(frames).all():
            raise ShapeError("frames must be finite")
        mask = np.zeros(frames.shape[:2], dtype=bool) if self.mask is None else np.asarray(self.mask, dtype=bool)
        if mask.shape != frames.shape[:2]:
            raise ShapeError(f"mask shape {mask.shape} != {frames.shape[:2]}")
        targets = frames if self.targets is None else np.asarray(self.targets, dtype=np.float64)
        if targets.shape != frames.shape:
            raise ShapeError(f"targets shape {targets.shape} != frames shape {frames.shape}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "targets", targets)

    @property
    def batch_size(self) -> int:
        return self.frames.shape[0]

    @property
    def length(self) -> int:
        return self.frames.shape[1]

    @property
    def dim(self) -> int:
        return self.frames.shape[2]

    @property
    def masked_fraction(self) -> float:
        return float(self.mask.mean())


class SyntheticAudioGenerator:
    """
    Deterministic stream of synthetic feature sequences

    Args:
        D: channels per frame
        L: frames per sequence
        seed: root seed; batches are drawn from its "synthetic-audio" stream
        sinusoids: components per sequence
        noise: std of the additive white noise
    """

    def __init__(self, D: int, L: int, seed: int = 0, sinusoids: int = 3, noise: float = 0.05):
        if D < 1 or L < 1:
            raise ShapeError(f"need D >= 1 and L >= 1, got D={D}, L={L}")
        self.D = D
        self.L = L
        self.sinusoids = sinusoids
        self.noise = noise
        self._rng = make_rng(seed, "synthetic-audio")
        self.offsets = self._rng.uniform(0.5, 1.5, size=D)

    def sequence(self) -> np.ndarray:
        rng = self._rng
        t = np.arange(self.L)[:, None]
        periods = rng.uniform(16.0, 64.0, size=self.sinusoids)
        phases = rng.uniform(0.0, 2 * np.pi, size=self.sinusoids)
        amplitudes = rng.uniform(0.0, 0.3, size=(self.sinusoids, self.D))
        waves = np.sin(2 * np.pi * t / periods[None, :] + phases[None, :])
        return self.offsets + waves @ amplitudes + rng.normal(0.0, self.noise, size=(self.L, self.D))

    def batch(self, batch_size: int) -> SequenceBatch:
        if batch_size < 1:
            raise ShapeError(f"batch_size must be >= 1, got {batch_size}")
        return SequenceBatch(np.stack([self.sequence() for _ in range(batch_size)]))


def mam_mask(batch: SequenceBatch, cfg, seed: int = 0) -> SequenceBatch:
    """
    Zero ceil(ratio * L / width) contiguous chunks per sequence

    Chunks sit in non-overlapping width-sized slots behind a random offset, so
    the masked fraction is the ratio rounded up to whole chunks. A ratio that
    cannot cover one frame leaves the batch unmasked and warns.

    Args:
        batch: unmasked batch
        cfg: anything with `mask_ratio` and `mask_width` (TrainConfig)
        seed: seed of the chunk placement
    """
    L = batch.length
    width = cfg.mask_width
    if not 1 <= width <= L:
        raise MaskParameterError(f"mask width must be in [1, {L}], got {width}")

    if cfg.mask_ratio * L < 1:
        warnings.warn(f"mask ratio {cfg.mask_ratio} masks no frame of a length-{L} sequence", MaskingWarning)
        return replace(batch, mask=np.zeros((batch.batch_size, L), dtype=bool), targets=batch.frames)

    slots = L // width
    chunks = min(slots, math.ceil(cfg.mask_ratio * L / width))
    rng = make_rng(seed, "mam-mask")

    mask = np.zeros((batch.batch_size, L), dtype=bool)
    for b in range(batch.batch_size):
        offset = int(rng.integers(0, L - slots * width + 1))
        for slot in rng.choice(slots, size=chunks, replace=False):
            start = offset + int(slot) * width
            mask[b, start:start + width] = True

    frames = batch.frames.copy()
    frames[mask] = 0.0
    return SequenceBatch(frames, mask, batch.frames)
