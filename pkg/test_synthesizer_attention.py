"""
SYNTHESIZER attention tests

Dense and Random SYNTHESIZER weights, the synthesizer forward pass and the
fixed-pattern initialization.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent / "src"))

from attention_lab.attention import (
    INPUT_INDEPENDENT_VARIANTS,
    SYNTHESIZER_VARIANTS,
    AttentionConfig,
    DenseSynthWeights,
    PatternSpec,
    RandomSynthLogits,
    SynthWeightSource,
    build_attention_layer,
    build_fixed_init,
    dense_synth_weights,
    fixed_init_head_counts,
    make_pattern,
    random_synth_weights,
    synthesizer_forward,
    write_pattern_csv,
)
from attention_lab.attention.synthesizer import init_dense_synth
from attention_lab.core import Tensor, linear_forward, relu
from attention_lab.errors import ConfigurationError, PatternError, SequenceLengthError, ShapeError


def softmax_rows(logits):
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def dense_weights(w1, b1, w2, b2):
    return DenseSynthWeights(Tensor.parameter(w1, "w1"), Tensor.parameter(b1, "b1"),
                             Tensor.parameter(w2, "w2"), Tensor.parameter(b2, "b2"))


class TestDenseSynthWeights:

    def test_zero_first_layer_collapses_to_bias(self):
        rng = np.random.default_rng(0)
        b2 = rng.normal(size=(1, 5))
        w = dense_weights(np.zeros((3, 4)), np.zeros((1, 4)), rng.normal(size=(4, 5)), b2)
        out = dense_synth_weights(Tensor.constant(rng.normal(size=(5, 3))), w)
        assert np.array_equal(out.data, np.repeat(b2, 5, axis=0))

    def test_single_hidden_unit_matches_composition(self):
        rng = np.random.default_rng(1)
        x = Tensor.constant(rng.normal(size=(4, 3)))
        w = dense_weights(rng.normal(size=(3, 1)), rng.normal(size=(1, 1)), rng.normal(size=(1, 6)),
                          rng.normal(size=(1, 6)))
        expected = linear_forward(relu(linear_forward(x, w.w1, w.b1)), w.w2, w.b2).data[:, :4]
        assert np.allclose(dense_synth_weights(x, w).data, expected)

    def test_negative_preactivations_give_bias_rows(self):
        b2 = np.arange(4.0).reshape(1, 4)
        w = dense_weights(np.ones((2, 3)), np.full((1, 3), -100.0), np.ones((3, 4)), b2)
        out = dense_synth_weights(Tensor.constant(np.ones((4, 2))), w)
        assert np.array_equal(out.data, np.repeat(b2, 4, axis=0))

    def test_longer_than_l_max(self):
        w = init_dense_synth(3, 2, 4, np.random.default_rng(0))
        with pytest.raises(SequenceLengthError):
            dense_synth_weights(Tensor.constant(np.ones((5, 3))), w)

    def test_inconsistent_shapes(self):
        with pytest.raises(ShapeError):
            dense_weights(np.ones((3, 4)), np.ones((1, 3)), np.ones((4, 5)), np.ones((1, 5)))

    @pytest.mark.parametrize("seed", range(100))
    def test_rows_are_local(self, seed):
        rng = np.random.default_rng(seed)
        L = int(rng.integers(2, 9))
        w = init_dense_synth(4, 3, L, rng)
        x = rng.normal(size=(L, 4))
        j = int(rng.integers(0, L))
        perturbed = x.copy()
        perturbed[j] += rng.normal(size=4)
        before = dense_synth_weights(Tensor.constant(x), w).data
        after = dense_synth_weights(Tensor.constant(perturbed), w).data
        others = np.arange(L) != j
        assert np.array_equal(before[others], after[others])


class TestRandomSynthWeights:

    def test_full_length(self):
        logits = RandomSynthLogits([Tensor.parameter(np.arange(9.0).reshape(3, 3), "h0")])
        assert np.array_equal(random_synth_weights(logits, 3)[0].data, np.arange(9.0).reshape(3, 3))

    def test_top_left_slice(self):
        logits = RandomSynthLogits([Tensor.parameter(np.arange(9.0).reshape(3, 3), "h0")])
        assert np.array_equal(random_synth_weights(logits, 2)[0].data, [[0.0, 1.0], [3.0, 4.0]])

    def test_too_long(self):
        logits = RandomSynthLogits([Tensor.parameter(np.zeros((3, 3)), "h0")])
        with pytest.raises(SequenceLengthError):
            random_synth_weights(logits, 4)

    @pytest.mark.parametrize("variant", INPUT_INDEPENDENT_VARIANTS)
    @pytest.mark.parametrize("seed", range(50))
    def test_input_independent(self, variant, seed):
        cfg = AttentionConfig(L=12, D=24, H=12, variant=variant)
        layer = build_attention_layer(cfg, seed)
        rng = np.random.default_rng(seed)
        _, first = layer.forward(Tensor.constant(rng.normal(size=(12, 24))))
        _, second = layer.forward(Tensor.constant(rng.normal(size=(12, 24))))
        assert first.as_array().tobytes() == second.as_array().tobytes()

    def test_frozen_weights_match_live_weights(self):
        cfg = AttentionConfig(L=10, D=24, H=12, variant="ours")
        layer = build_attention_layer(cfg, 3)
        x = Tensor.constant(np.random.default_rng(0).normal(size=(10, 24)))
        live_out, live = layer.forward(x)
        layer.freeze()
        frozen_out, frozen = layer.forward(x)
        assert np.array_equal(live.as_array(), frozen.as_array())
        assert np.array_equal(live_out.data, frozen_out.data)
        assert not any(h.is_parameter for h in frozen.heads)


class TestSynthesizerForward:

    @staticmethod
    def _random_source(logits):
        return SynthWeightSource("random", logits=RandomSynthLogits(
            [Tensor.parameter(l, f"h{i}") for i, l in enumerate(logits)]))

    def test_equal_logits_average_values(self):
        rng = np.random.default_rng(0)
        cfg = AttentionConfig(L=5, D=4, H=1, variant="syn-random")
        x = rng.normal(size=(5, 4))
        w_v = Tensor.parameter(rng.normal(size=(4, 4)), "wv")
        out, _ = synthesizer_forward(Tensor.constant(x), [w_v], cfg, self._random_source([np.zeros((5, 5))]))
        v = x @ w_v.data
        assert np.allclose(out.data, np.repeat(v.mean(axis=0, keepdims=True), 5, axis=0))

    def test_saturated_diagonal_returns_values(self):
        rng = np.random.default_rng(1)
        cfg = AttentionConfig(L=6, D=4, H=1, variant="syn-random")
        x = rng.normal(size=(6, 4))
        w_v = Tensor.parameter(rng.normal(size=(4, 4)), "wv")
        sharp = make_pattern(PatternSpec.diagonal(0, sharpness=50.0), 6)
        out, _ = synthesizer_forward(Tensor.constant(x), [w_v], cfg, self._random_source([sharp]))
        assert np.allclose(out.data, x @ w_v.data, atol=1e-6)

    @pytest.mark.parametrize("variant", SYNTHESIZER_VARIANTS)
    def test_matches_oracle(self, variant):
        cfg = AttentionConfig(L=7, D=12, H=12 if variant == "ours" else 3, variant=variant)
        layer = build_attention_layer(cfg, 5)
        x = np.random.default_rng(6).normal(size=(7, 12))
        out, weights = layer.forward(Tensor.constant(x))
        source = layer.synth_source
        expected = []
        for head, w_v in enumerate(layer.value_weights):
            if source.kind.startswith("dense"):
                d = source.dense[head]
                hidden = np.maximum(x @ d.w1.data + d.b1.data, 0.0)
                logits = (hidden @ d.w2.data + d.b2.data)[:, :7]
            else:
                logits = source.logits.heads[head].data[:7, :7]
            expected.append(softmax_rows(logits) @ (x @ w_v.data))
        assert np.allclose(out.data, np.concatenate(expected, axis=1), atol=1e-12)
        assert np.allclose(weights.as_array().sum(axis=2), 1.0, atol=1e-9)

    def test_dense_single_head_keeps_model_width(self):
        layer = build_attention_layer(AttentionConfig(L=5, D=12, H=3, variant="syn-dense"), 0)
        out, weights = layer.forward(Tensor.constant(np.ones((5, 12))))
        assert out.shape == (5, 12)
        assert len(weights.heads) == 1

    def test_value_count_must_match_heads(self):
        cfg = AttentionConfig(L=3, D=4, H=2, variant="syn-random")
        source = self._random_source([np.zeros((3, 3)), np.zeros((3, 3))])
        with pytest.raises(ShapeError):
            synthesizer_forward(Tensor.constant(np.ones((3, 4))), [Tensor.parameter(np.ones((4, 2)), "v")],
                                cfg, source)

    def test_unknown_weight_source(self):
        with pytest.raises(ConfigurationError):
            SynthWeightSource("factorized")


class TestPatterns:

    def test_saturated_diagonal_is_identity(self):
        weights = softmax_rows(make_pattern(PatternSpec.diagonal(0, sharpness=60.0), 5))
        assert np.allclose(weights, np.eye(5), atol=1e-12)

    def test_increasing_rows(self):
        weights = softmax_rows(make_pattern(PatternSpec.increasing(), 3))
        assert np.all(np.diff(weights, axis=1) > 0)

    def test_shifted_peak(self):
        logits = make_pattern(PatternSpec.diagonal(2), 6)
        assert np.argmax(logits[0]) == 2
        assert np.argmax(logits[5]) == 5

    @pytest.mark.parametrize("shift", [3, -3])
    def test_invalid_shift(self, shift):
        with pytest.raises(PatternError):
            PatternSpec.diagonal(shift)

    def test_shifted_diagonal_needs_three_positions(self):
        with pytest.raises(PatternError):
            make_pattern(PatternSpec.diagonal(1), 2)

    def test_sharpness_must_be_positive(self):
        with pytest.raises(PatternError):
            PatternSpec("diagonal", sharpness=0.0)

    def test_sparse_pattern_is_seeded(self):
        spec = PatternSpec.sparse()
        assert np.array_equal(make_pattern(spec, 8, seed=4), make_pattern(spec, 8, seed=4))
        assert not np.array_equal(make_pattern(spec, 8, seed=4), make_pattern(spec, 8, seed=5))


class TestFixedInit:

    @pytest.fixture(scope="class")
    def logits(self):
        return build_fixed_init(12, 128, seed=0)

    def test_first_head_is_plain_diagonal(self, logits):
        assert np.array_equal(logits.heads[0].data, make_pattern(PatternSpec.diagonal(0), 128))

    def test_diagonal_shifts(self, logits):
        for head, shift in zip(range(5), (0, -1, -2, 1, 2)):
            assert np.argmax(logits.heads[head].data[64]) == 64 + shift

    def test_sparse_heads_distinct_and_small(self, logits):
        sparse = [logits.heads[h].data for h in range(7, 12)]
        for i in range(5):
            assert np.abs(sparse[i]).max() < 0.2
            for j in range(i + 1, 5):
                assert not np.array_equal(sparse[i], sparse[j])

    def test_monotone_heads_mirror(self, logits):
        assert np.array_equal(logits.heads[5].data[:, ::-1], logits.heads[6].data)

    def test_other_head_counts_need_flag(self):
        with pytest.raises(ConfigurationError):
            build_fixed_init(4, 16)

    @pytest.mark.parametrize("H,expected", [(12, (5, 1, 1, 5)), (2, (1, 0, 0, 1)), (6, (3, 1, 0, 2)),
                                            (24, (10, 2, 2, 10))])
    def test_proportional_counts(self, H, expected):
        assert fixed_init_head_counts(H, proportional=True) == expected

    def test_parameter_names(self):
        logits = build_fixed_init(12, 8, prefix="layer0.")
        assert logits.heads[3].name == "layer0.logits.h3"
        assert all(h.is_parameter for h in logits.heads)


def test_write_pattern_csv(tmp_path):
    path = write_pattern_csv(np.eye(3), tmp_path / "grids" / "diag.csv")
    frame = pd.read_csv(path, index_col="q")
    assert list(frame.columns) == ["k0", "k1", "k2"]
    assert np.array_equal(frame.to_numpy(), np.eye(3))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
