"""
Baseline attention tests

Full QK multi-head attention and the shared-QK variant against a numpy
oracle built step by step.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent / "src"))

from attention_lab.attention import (
    AttentionConfig,
    ProjectionWeights,
    full_attention_forward,
    init_projection_weights,
    project_qkv,
    scaled_scores,
)
from attention_lab.core import Tensor
from attention_lab.errors import ConfigurationError, ShapeError


def softmax_rows(scores):
    shifted = np.exp(scores - scores.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def oracle_attention(x, w, mask=None):
    outputs = []
    for head, (w_q, w_k, w_v) in enumerate(zip(w.w_q, w.w_k, w.w_v)):
        q, k, v = x @ w_q.data, x @ w_k.data, x @ w_v.data
        scores = q @ k.T / np.sqrt(q.shape[1])
        if mask is not None:
            scores = np.where(mask[head], scores, -np.inf)
        outputs.append(softmax_rows(scores) @ v)
    return np.concatenate(outputs, axis=1)


@pytest.fixture
def small_setup():
    cfg = AttentionConfig(L=6, D=8, H=2, variant="baseline-qk")
    rng = np.random.default_rng(7)
    x = rng.normal(size=(cfg.L, cfg.D))
    return cfg, init_projection_weights(cfg, rng), x


class TestProjectQKV:

    def test_identity_projections(self):
        x = np.array([[1.0, 2.0], [3.0, -1.0], [0.5, 0.0]])
        eye = Tensor.parameter(np.eye(2), "eye")
        w = ProjectionWeights([eye], [Tensor.parameter(np.eye(2), "k")], [Tensor.parameter(np.eye(2), "v")])
        (q, k, v), = project_qkv(Tensor.constant(x), w)
        for m in (q, k, v):
            assert np.array_equal(m.data, x)

    def test_shared_qk_gives_equal_queries_and_keys(self):
        cfg = AttentionConfig(L=5, D=6, H=3, variant="baseline-q")
        rng = np.random.default_rng(0)
        w = init_projection_weights(cfg, rng, shared_qk=True)
        assert all(q is k for q, k in zip(w.w_q, w.w_k))
        for q, k, _ in project_qkv(Tensor.constant(rng.normal(size=(5, 6))), w):
            assert np.array_equal(q.data - k.data, np.zeros(q.shape))

    def test_matches_matmul_oracle(self, small_setup):
        cfg, w, x = small_setup
        for (q, k, v), w_q, w_k, w_v in zip(project_qkv(Tensor.constant(x), w), w.w_q, w.w_k, w.w_v):
            assert np.allclose(q.data, x @ w_q.data)
            assert np.allclose(k.data, x @ w_k.data)
            assert np.allclose(v.data, x @ w_v.data)

    def test_feature_mismatch(self, small_setup):
        _, w, _ = small_setup
        with pytest.raises(ShapeError):
            project_qkv(Tensor.constant(np.ones((3, 5))), w)

    def test_shared_flag_requires_same_tensors(self):
        a, b, v = (Tensor.parameter(np.eye(2), n) for n in "abv")
        with pytest.raises(ShapeError):
            ProjectionWeights([a], [b], [v], shared_qk=True)


class TestScaledScores:

    def test_hand_example(self):
        out = scaled_scores(Tensor.constant([[1.0], [2.0]]), Tensor.constant([[1.0], [0.0]]))
        assert np.array_equal(out.data, [[1.0, 0.0], [2.0, 0.0]])

    def test_zero_queries(self):
        out = scaled_scores(Tensor.constant(np.zeros((3, 2))), Tensor.constant(np.ones((3, 2))))
        assert np.array_equal(out.data, np.zeros((3, 3)))

    def test_orthonormal_rows(self):
        eye = Tensor.constant(np.eye(4))
        assert np.allclose(scaled_scores(eye, eye).data, 0.5 * np.eye(4))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            scaled_scores(Tensor.constant(np.ones((3, 2))), Tensor.constant(np.ones((4, 2))))


class TestFullAttention:

    def test_single_token_returns_its_value(self):
        cfg = AttentionConfig(L=1, D=4, H=2)
        w = init_projection_weights(cfg, np.random.default_rng(1))
        x = np.random.default_rng(2).normal(size=(1, 4))
        out, weights = full_attention_forward(Tensor.constant(x), w, cfg)
        expected = np.concatenate([x @ w_v.data for w_v in w.w_v], axis=1)
        assert np.allclose(out.data, expected)
        assert all(np.array_equal(a.data, [[1.0]]) for a in weights.heads)

    def test_one_hot_values_expose_weights(self):
        cfg = AttentionConfig(L=3, D=3, H=1)
        rng = np.random.default_rng(4)
        w = ProjectionWeights([Tensor.parameter(rng.normal(size=(3, 3)), "q")],
                              [Tensor.parameter(rng.normal(size=(3, 3)), "k")],
                              [Tensor.parameter(np.eye(3), "v")])
        out, weights = full_attention_forward(Tensor.constant(np.eye(3)), w, cfg)
        assert np.allclose(out.data, weights.heads[0].data)

    def test_matches_oracle(self, small_setup):
        cfg, w, x = small_setup
        out, _ = full_attention_forward(Tensor.constant(x), w, cfg)
        assert np.allclose(out.data, oracle_attention(x, w), atol=1e-12)

    def test_rejects_other_variants(self, small_setup):
        cfg, w, x = small_setup
        with pytest.raises(ConfigurationError):
            full_attention_forward(Tensor.constant(x), w, cfg.with_variant("sparse-strided"))

    @pytest.mark.parametrize("seed", range(100))
    def test_permutation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        cfg = AttentionConfig(L=int(rng.integers(2, 9)), D=6, H=2)
        w = init_projection_weights(cfg, rng)
        x = rng.normal(size=(cfg.L, cfg.D))
        perm = rng.permutation(cfg.L)
        out, _ = full_attention_forward(Tensor.constant(x), w, cfg)
        permuted, _ = full_attention_forward(Tensor.constant(x[perm]), w, cfg)
        assert np.allclose(permuted.data, out.data[perm], atol=1e-12)

    @pytest.mark.parametrize("seed", range(100))
    def test_weight_rows_sum_to_one(self, seed):
        rng = np.random.default_rng(seed)
        cfg = AttentionConfig(L=int(rng.integers(1, 12)), D=8, H=4)
        w = init_projection_weights(cfg, rng)
        _, weights = full_attention_forward(Tensor.constant(rng.normal(size=(cfg.L, cfg.D)) * 3), w, cfg)
        assert np.allclose(weights.as_array().sum(axis=2), 1.0, atol=1e-9)

    def test_shared_qk_equals_full_with_tied_values(self, small_setup):
        cfg, _, x = small_setup
        rng = np.random.default_rng(11)
        shared = init_projection_weights(cfg.with_variant("baseline-q"), rng, shared_qk=True)
        untied = ProjectionWeights([Tensor.parameter(q.data, f"q{i}") for i, q in enumerate(shared.w_q)],
                                   [Tensor.parameter(q.data, f"k{i}") for i, q in enumerate(shared.w_q)],
                                   list(shared.w_v))
        tied_out, _ = full_attention_forward(Tensor.constant(x), shared, cfg.with_variant("baseline-q"))
        full_out, _ = full_attention_forward(Tensor.constant(x), untied, cfg)
        assert np.allclose(tied_out.data, full_out.data, atol=1e-12)

    def test_parameters_skip_tied_keys(self):
        cfg = AttentionConfig(L=4, D=4, H=2, variant="baseline-q")
        shared = init_projection_weights(cfg, np.random.default_rng(0), shared_qk=True)
        full = init_projection_weights(cfg, np.random.default_rng(0))
        assert len(shared.parameters()) == 4
        assert len(full.parameters()) == 6


class TestAttentionConfig:

    def test_defaults(self):
        cfg = AttentionConfig()
        assert (cfg.L, cfg.D, cfg.H, cfg.C, cfg.N, cfg.layers) == (128, 64, 12, 32, 16, 6)
        assert cfg.head_dim == 5
        assert cfg.effective_stride == 12

    def test_effective_stride_is_ceil_sqrt(self):
        assert AttentionConfig(L=500).effective_stride == 23
        assert AttentionConfig(L=16).effective_stride == 4

    @pytest.mark.parametrize("kwargs", [
        {"L": 0}, {"H": 0}, {"H": 65}, {"C": 0}, {"N": 0}, {"U": 0.0}, {"U": 1.5}, {"m": 0},
        {"layers": 0}, {"L": 10, "L_max": 5}, {"variant": "frobnicate"},
    ])
    def test_invalid_values(self, kwargs):
        with pytest.raises(ConfigurationError):
            AttentionConfig(**kwargs)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
