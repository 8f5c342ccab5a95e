"""
Generic residual encoder around any attention variant

Each block adds the attention output (projected back to D by W_O) and a ReLU
feed-forward to the residual stream. A linear head maps the final stream to
reconstructed frames.
"""

from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..attention import AttentionConfig, AttentionLayer, AttentionWeights
from ..core import Tensor, add, linear_forward, relu
from ..errors import ShapeError
from ..seeding import make_rng

# Init std of the projections that write into the residual stream
RESIDUAL_INIT_STD = 0.02


@dataclass
class EncoderOutput:
    prediction: Tensor
    attention: List[AttentionWeights]


class EncoderBlock:
    """Attention + feed-forward, both residual"""

    def __init__(self, cfg: AttentionConfig, rng: np.random.Generator, prefix: str):
        D = cfg.D
        hidden = 2 * D
        self.attention = AttentionLayer(cfg, rng, prefix)
        self.w_o = Tensor.parameter(rng.normal(0.0, RESIDUAL_INIT_STD, (self.attention.output_dim, D)), f"{prefix}attn_out.w")
        self.b_o = Tensor.parameter(np.zeros((1, D)), f"{prefix}attn_out.b")
        self.w_ff1 = Tensor.parameter(rng.normal(0.0, 1.0 / np.sqrt(D), (D, hidden)), f"{prefix}ffn.w1")
        self.b_ff1 = Tensor.parameter(np.zeros((1, hidden)), f"{prefix}ffn.b1")
        self.w_ff2 = Tensor.parameter(rng.normal(0.0, RESIDUAL_INIT_STD, (hidden, D)), f"{prefix}ffn.w2")
        self.b_ff2 = Tensor.parameter(np.zeros((1, D)), f"{prefix}ffn.b2")

    def parameters(self) -> List[Tensor]:
        return self.attention.parameters() + [self.w_o, self.b_o, self.w_ff1, self.b_ff1, self.w_ff2, self.b_ff2]

    def forward(self, h: Tensor):
        attended, weights = self.attention.forward(h)
        h = add(h, linear_forward(attended, self.w_o, self.b_o))
        hidden = relu(linear_forward(h, self.w_ff1, self.b_ff1))
        h = add(h, linear_forward(hidden, self.w_ff2, self.b_ff2))
        return h, weights


class AttentionEncoder:
    """Stack of `cfg.layers` encoder blocks plus a reconstruction head"""

    def __init__(self, cfg: AttentionConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        self.blocks = [EncoderBlock(cfg, make_rng(seed, "encoder", cfg.variant, i), f"layer{i}.")
                       for i in range(cfg.layers)]
        self.w_out = Tensor.parameter(np.eye(cfg.D), "head.w")
        self.b_out = Tensor.parameter(np.zeros((1, cfg.D)), "head.b")

    @property
    def variant(self) -> str:
        return self.cfg.variant

    def parameters(self) -> List[Tensor]:
        params = [p for block in self.blocks for p in block.parameters()]
        return params + [self.w_out, self.b_out]

    def forward(self, frames: np.ndarray) -> EncoderOutput:
        """Reconstruct one L x D sequence"""
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.cfg.D:
            raise ShapeError(f"expected an L x {self.cfg.D} sequence, got {frames.shape}")
        h = Tensor.constant(frames)
        attention = []
        for block in self.blocks:
            h, weights = block.forward(h)
            attention.append(weights)
        return EncoderOutput(linear_forward(h, self.w_out, self.b_out), attention)

    def attention_maps(self, frames: np.ndarray) -> np.ndarray:
        """(layers, H, L, L) post-softmax weights for one sequence"""
        return np.stack([w.as_array() for w in self.forward(frames).attention])

    def freeze(self) -> None:
        for block in self.blocks:
            block.attention.freeze()

    def unfreeze(self) -> None:
        for block in self.blocks:
            block.attention.unfreeze()

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"missing weights for {p.name}")
            if state[p.name].shape != p.shape:
                raise ShapeError(f"{p.name}: stored {state[p.name].shape} vs model {p.shape}")
            p.data[...] = state[p.name]
        self.unfreeze()
