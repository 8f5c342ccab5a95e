"""
Masked Audio Model pretraining loop

Momentum gradient descent with global-norm clipping on the L1 reconstruction
loss of masked frames.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from ..attention import AttentionConfig
from ..core import Tensor, add, as_tensor, backward, l1_loss, scale
from ..errors import ConfigurationError, DivergenceError, ShapeError, UndefinedLossError
from ..models import AttentionEncoder
from ..seeding import derive_seed
from .data import SequenceBatch, SyntheticAudioGenerator, mam_mask


@dataclass(frozen=True)
class TrainConfig:
    """
    Desk-scale pretraining recipe

    Args:
        steps: optimizer steps (0 returns the initial weights)
        batch_size: sequences per step
        learning_rate: step size
        mask_ratio: target masked fraction, in (0, 1)
        mask_width: frames per masked chunk
        momentum: heavy-ball momentum
        max_grad_norm: global gradient-norm clip
        seed: root seed for the model, data and masks
        log_every: progress line interval when verbose
    """
    steps: int = 200
    batch_size: int = 8
    learning_rate: float = 1e-3
    mask_ratio: float = 0.15
    mask_width: int = 3
    momentum: float = 0.9
    max_grad_norm: float = 5.0
    seed: int = 0
    log_every: int = 20

    def __post_init__(self):
        if self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 < self.mask_ratio < 1:
            raise ConfigurationError(f"mask_ratio must be in (0, 1), got {self.mask_ratio}")
        if self.mask_width < 1:
            raise ConfigurationError(f"mask_width must be >= 1, got {self.mask_width}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.max_grad_norm <= 0:
            raise ConfigurationError(f"max_grad_norm must be positive, got {self.max_grad_norm}")


@dataclass
class TrainResult:
    variant: str
    losses: List[float]
    weights: Dict[str, np.ndarray]
    model: AttentionEncoder = field(repr=False)


def reconstruction_loss(predicted: Union[Tensor, np.ndarray],
                        target: np.ndarray,
                        mask_positions: np.ndarray) -> Tensor:
    """Mean absolute error over the masked frames only"""
    predicted = as_tensor(predicted)
    target = np.asarray(target, dtype=np.float64)
    mask_positions = np.asarray(mask_positions, dtype=bool).reshape(-1)
    if predicted.shape != target.shape:
        raise ShapeError(f"predicted {predicted.shape} vs target {target.shape}")
    if mask_positions.shape[0] != target.shape[0]:
        raise ShapeError(f"mask length {mask_positions.shape[0]} != sequence length {target.shape[0]}")
    if not mask_positions.any():
        raise UndefinedLossError("no masked positions to reconstruct")
    return l1_loss(predicted, target, rows=mask_positions)


class MAMTrainer:
    """Owns one encoder and trains it on masked reconstruction"""

    def __init__(self, attention_cfg: AttentionConfig, cfg: TrainConfig, verbose: bool = True):
        self.attention_cfg = attention_cfg
        self.cfg = cfg
        self.verbose = verbose
        self.model = AttentionEncoder(attention_cfg, seed=derive_seed(cfg.seed, "model"))

    def batch_loss(self, batch: SequenceBatch) -> Tensor:
        """Masked-frame L1 over the whole batch, weighted by each sequence's masked count"""
        counts = batch.mask.sum(axis=1)
        total = int(counts.sum())
        if total == 0:
            raise UndefinedLossError("batch has no masked positions")
        loss = None
        for b in np.flatnonzero(counts):
            prediction = self.model.forward(batch.frames[b]).prediction
            term = scale(reconstruction_loss(prediction, batch.targets[b], batch.mask[b]), counts[b] / total)
            loss = term if loss is None else add(loss, term)
        return loss

    def _clip_factor(self, grads: List[np.ndarray]) -> float:
        norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
        return min(1.0, self.cfg.max_grad_norm / (norm + 1e-12))

    def train(self, data: SyntheticAudioGenerator) -> TrainResult:
        cfg = self.cfg
        params = self.model.parameters()
        velocity = [np.zeros_like(p.data) for p in params]
        losses: List[float] = []

        if self.verbose:
            print(f"🚀 Training {self.attention_cfg.variant} for {cfg.steps} steps "
                  f"(batch {cfg.batch_size}, lr {cfg.learning_rate})")

        for step in range(cfg.steps):
            batch = mam_mask(data.batch(cfg.batch_size), cfg, seed=derive_seed(cfg.seed, "mask", step))
            loss = self.batch_loss(batch)
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(step, value)

            grads = [g.values for g in backward(loss, params)]
            factor = self._clip_factor(grads)
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v += factor * g
                p.data -= cfg.learning_rate * v
            losses.append(value)

            if self.verbose and (step % cfg.log_every == 0 or step == cfg.steps - 1):
                print(f"📈 step {step:>4}  loss {value:.4f}")

        # cached frozen weights would be stale after the updates
        self.model.unfreeze()
        if self.verbose:
            print("✅ Training complete")
        return TrainResult(self.attention_cfg.variant, losses, self.model.state_dict(), self.model)


def train(variant: str,
          cfg: TrainConfig,
          data: SyntheticAudioGenerator,
          attention_cfg: Optional[AttentionConfig] = None,
          verbose: bool = True) -> TrainResult:
    """Train a fresh encoder of `variant` and return its loss trajectory and weights"""
    attention_cfg = (attention_cfg or AttentionConfig(L=data.L, D=data.D)).with_variant(variant)
    if (attention_cfg.L, attention_cfg.D) != (data.L, data.D):
        raise ConfigurationError(f"data is {data.L} x {data.D} but the model expects "
                                 f"{attention_cfg.L} x {attention_cfg.D}")
    return MAMTrainer(attention_cfg, cfg, verbose=verbose).train(data)


def write_loss_csv(losses: List[float], path: Path) -> Path:
    """step,loss rows; header only for an empty trajectory"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"step": np.arange(len(losses), dtype=int), "loss": np.asarray(losses, dtype=np.float64)}) \
        .to_csv(path, index=False)
    return path
