"""
Variant registry: one attention layer for any of the thirteen variants
"""

from typing import Dict, List, Tuple

import numpy as np

from ..core import Tensor
from ..errors import ConfigurationError
from ..seeding import derive_seed
from .baseline import AttentionWeights, full_attention_forward, init_projection_weights
from .config import BASELINE_VARIANTS, LSH_VARIANTS, SPARSE_VARIANTS, AttentionConfig
from .lsh import TransformSpec, draw_directions, lsh_attention_forward
from .sparse import AttentionMask, default_head_masks, sparse_attention_forward
from .synthesizer import (
    SynthWeightSource,
    build_fixed_init,
    init_dense_synth,
    init_random_logits,
    synthesizer_forward,
)


class AttentionLayer:
    """
    Parameters and forward pass of one attention variant

    Sparse and LSH variants tie W_Q and W_K (shared-QK), like baseline-q.
    """

    def __init__(self, cfg: AttentionConfig, rng: np.random.Generator, prefix: str = ""):
        self.cfg = cfg
        self.variant = cfg.variant
        self.prefix = prefix
        self._masks: Dict[int, List[AttentionMask]] = {}
        self.projections = None
        self.synth_source = None
        self.value_weights: List[Tensor] = []
        self.transform_spec = None
        self.directions = []

        if self.variant in BASELINE_VARIANTS + SPARSE_VARIANTS + LSH_VARIANTS:
            shared = self.variant != "baseline-qk"
            self.projections = init_projection_weights(cfg, rng, shared_qk=shared, prefix=prefix)
            if self.variant in LSH_VARIANTS:
                self.transform_spec = TransformSpec.for_config(cfg)
                self.directions = draw_directions(cfg.head_dim, self.transform_spec, cfg.H, rng)
        else:
            self._init_synthesizer(rng)

    def _init_synthesizer(self, rng: np.random.Generator) -> None:
        cfg = self.cfg
        L_max = cfg.max_length
        if self.variant == "syn-dense":
            source = SynthWeightSource("dense", dense=[init_dense_synth(cfg.D, cfg.N, L_max, rng, f"{self.prefix}dense.")])
            value_dim = cfg.D
        elif self.variant == "syn-dense-mh":
            dense = [init_dense_synth(cfg.D, cfg.N, L_max, rng, f"{self.prefix}dense.h{h}.") for h in range(cfg.H)]
            source = SynthWeightSource("dense-multihead", dense=dense)
            value_dim = cfg.head_dim
        elif self.variant == "syn-random":
            source = SynthWeightSource("random", logits=init_random_logits(cfg.H, L_max, rng, self.prefix))
            value_dim = cfg.head_dim
        elif self.variant == "ours":
            seed = int(rng.integers(0, 2**31 - 1))
            logits = build_fixed_init(cfg.H, L_max, seed, proportional=cfg.proportional_heads, prefix=self.prefix)
            source = SynthWeightSource("fixed-init", logits=logits)
            value_dim = cfg.head_dim
        else:
            raise ConfigurationError(f"no attention layer for variant '{self.variant}'")

        std = 1.0 / np.sqrt(cfg.D)
        self.synth_source = source
        self.value_weights = [Tensor.parameter(rng.normal(0.0, std, (cfg.D, value_dim)), f"{self.prefix}wv.h{h}")
                              for h in range(source.heads)]

    @property
    def heads(self) -> int:
        return self.synth_source.heads if self.synth_source else self.cfg.H

    @property
    def output_dim(self) -> int:
        """Width of the concatenated head outputs"""
        if self.variant == "syn-dense":
            return self.cfg.D
        return self.cfg.H * self.cfg.head_dim

    def parameters(self) -> List[Tensor]:
        if self.projections is not None:
            return self.projections.parameters()
        return self.synth_source.parameters() + list(self.value_weights)

    def masks(self, L: int) -> List[AttentionMask]:
        if L not in self._masks:
            self._masks[L] = default_head_masks(self.cfg, L)
        return self._masks[L]

    def freeze(self) -> None:
        """Cache input-independent weights for inference"""
        if self.synth_source is not None and self.synth_source.logits is not None:
            self.synth_source.logits.freeze()

    def unfreeze(self) -> None:
        if self.synth_source is not None and self.synth_source.logits is not None:
            self.synth_source.logits.unfreeze()

    def forward(self, x: Tensor) -> Tuple[Tensor, AttentionWeights]:
        if self.variant in BASELINE_VARIANTS:
            return full_attention_forward(x, self.projections, self.cfg)
        if self.variant in SPARSE_VARIANTS:
            return sparse_attention_forward(x, self.projections, self.cfg, self.masks(x.rows))
        if self.variant in LSH_VARIANTS:
            return lsh_attention_forward(x, self.projections, self.cfg, self.transform_spec, self.directions)
        return synthesizer_forward(x, self.value_weights, self.cfg, self.synth_source)


def build_attention_layer(cfg: AttentionConfig, seed: int, name: str = "attention") -> AttentionLayer:
    """Layer whose parameters come from the named seed stream"""
    return AttentionLayer(cfg, np.random.default_rng(derive_seed(seed, name, cfg.variant)))
