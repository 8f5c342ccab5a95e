"""Attention variants: baselines, sparse masks, LSH/ALSH selection, SYNTHESIZER"""

from .baseline import (
    AttentionWeights,
    ProjectionWeights,
    full_attention_forward,
    init_projection_weights,
    project_qkv,
    scaled_scores,
)
from .config import (
    ASYMMETRIC_VARIANTS,
    BASELINE_VARIANTS,
    INPUT_INDEPENDENT_VARIANTS,
    LSH_VARIANTS,
    SPARSE_VARIANTS,
    SYNTHESIZER_VARIANTS,
    VARIANTS,
    AttentionConfig,
    check_variant,
)
from .layer import AttentionLayer, build_attention_layer
from .lsh import (
    CandidateSet,
    HashDirection,
    TransformSpec,
    brute_force_mips,
    lsh_attention_forward,
    normalize_inputs,
    recall_at_c,
    select_candidates,
    sign_hash,
    transform_key,
    transform_query,
    transformed_dim,
)
from .sparse import (
    AttentionMask,
    default_head_masks,
    fixed_mask,
    mask_from_bitmap,
    sparse_attention_forward,
    strided_mask,
)
from .synthesizer import (
    DenseSynthWeights,
    PatternSpec,
    RandomSynthLogits,
    SynthWeightSource,
    build_fixed_init,
    dense_synth_weights,
    fixed_init_head_counts,
    make_pattern,
    random_synth_weights,
    synthesizer_forward,
    write_pattern_csv,
)

__all__ = [
    "ASYMMETRIC_VARIANTS", "BASELINE_VARIANTS", "INPUT_INDEPENDENT_VARIANTS", "LSH_VARIANTS",
    "SPARSE_VARIANTS", "SYNTHESIZER_VARIANTS", "VARIANTS",
    "AttentionConfig", "AttentionLayer", "AttentionMask", "AttentionWeights", "CandidateSet",
    "DenseSynthWeights", "HashDirection", "PatternSpec", "ProjectionWeights", "RandomSynthLogits",
    "SynthWeightSource", "TransformSpec",
    "brute_force_mips", "build_attention_layer", "build_fixed_init", "check_variant",
    "default_head_masks", "dense_synth_weights", "fixed_init_head_counts", "fixed_mask",
    "full_attention_forward", "init_projection_weights", "lsh_attention_forward", "make_pattern",
    "mask_from_bitmap", "normalize_inputs", "project_qkv", "random_synth_weights", "recall_at_c",
    "scaled_scores", "select_candidates", "sign_hash", "sparse_attention_forward", "strided_mask",
    "synthesizer_forward", "transform_key", "transform_query", "transformed_dim", "write_pattern_csv",
]
