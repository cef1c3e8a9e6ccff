"""Tests for the hybrid model: shapes, masking, pooling, gradients, exports."""

import numpy as np
import numpy.testing as npt
import pytest

from smishnet import tensor as tc
from smishnet import text as tx
from smishnet.model import (
    AttentionRecord,
    HybridModelConfig,
    attention_pool,
    char_cnn_forward,
    encoder_forward,
    export_attention_map,
    forward,
    init_params,
    predict,
    trim_sample,
)


def tiny_config(**overrides):
    """Smallest config exercising every component; cheap enough for grad checks."""
    defaults = dict(
        vocab_size=12,
        char_vocab_size=8,
        hidden_dim=8,
        encoder_layers=1,
        attention_heads=1,
        ff_dim=16,
        char_embed_dim=4,
        cnn_filter_widths=(2,),
        cnn_filters_per_width=4,
        fusion_dim=8,
        dropout_rate=0.0,
        max_subword_len=8,
        max_char_len=16,
    )
    defaults.update(overrides)
    return HybridModelConfig(**defaults)


def tiny_sample(rng, config, n_real=5, n_chars=10, label=0):
    ids = np.zeros(config.max_subword_len, dtype=np.int64)
    ids[0] = 2  # CLS
    ids[1 : n_real - 1] = rng.integers(4, config.vocab_size, size=n_real - 2)
    ids[n_real - 1] = 3  # SEP
    mask = np.zeros(config.max_subword_len)
    mask[:n_real] = 1.0
    chars = np.zeros(config.max_char_len, dtype=np.int64)
    chars[:n_chars] = rng.integers(2, config.char_vocab_size, size=n_chars)
    return tx.EncodedSample(subword_ids=ids, attention_mask=mask, char_ids=chars, label=label)


class TestConfig:
    def test_head_divisibility_enforced(self):
        with pytest.raises(ValueError, match="divisible"):
            tiny_config(hidden_dim=10, attention_heads=4)

    def test_num_classes_fixed(self):
        with pytest.raises(ValueError, match="num_classes"):
            tiny_config(num_classes=2)

    def test_positive_dims_enforced(self):
        with pytest.raises(ValueError, match="ff_dim"):
            tiny_config(ff_dim=0)

    def test_dropout_range(self):
        with pytest.raises(ValueError, match="dropout"):
            tiny_config(dropout_rate=1.0)

    def test_filter_width_bounds(self):
        with pytest.raises(ValueError, match="widths"):
            tiny_config(cnn_filter_widths=(2, 99))

    def test_derived_dims(self):
        config = HybridModelConfig(vocab_size=100, char_vocab_size=50)
        assert config.head_dim == 32
        assert config.char_feature_dim == 192


class TestInitParams:
    def test_deterministic(self):
        config = tiny_config()
        p1, p2 = init_params(config, seed=7), init_params(config, seed=7)
        assert p1.names() == p2.names()
        for a, b in zip(p1, p2):
            assert np.array_equal(a.data, b.data)

    def test_classifier_shape(self):
        config = HybridModelConfig(vocab_size=100, char_vocab_size=50)
        params = init_params(config, seed=0)
        assert params["classifier.w"].shape == (config.fusion_dim, 3)

    def test_layer_norm_gammas_are_one(self):
        params = init_params(tiny_config(), seed=0)
        for name, p in params.items():
            if name.endswith("gamma"):
                assert np.all(p.data == 1.0)
            if name.endswith(("beta", ".b", "bq", "bk", "bv", "bo", "b1", "b2")):
                assert np.all(p.data == 0.0)

    def test_weight_range_follows_fan_sizes(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        w = params["fusion.w"].data
        limit = np.sqrt(6.0 / sum(w.shape))
        assert np.all(np.abs(w) <= limit)

    def test_unique_names(self):
        params = init_params(tiny_config(encoder_layers=2), seed=0)
        assert len(params.names()) == len(set(params.names()))


class TestEncoderForward:
    def test_output_shape(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        sample = tiny_sample(np.random.default_rng(0), config)
        states, _ = encoder_forward(sample.subword_ids, sample.attention_mask, params, config)
        assert states.shape == (config.max_subword_len, config.hidden_dim)

    def test_padding_invariance_of_real_positions(self):
        config = tiny_config()
        params = init_params(config, seed=1)
        rng = np.random.default_rng(2)
        for _ in range(20):
            sample = tiny_sample(rng, config, n_real=int(rng.integers(2, 7)))
            n = int(sample.attention_mask.sum())
            padded, _ = encoder_forward(sample.subword_ids, sample.attention_mask, params, config)
            short, _ = encoder_forward(
                sample.subword_ids[:n], sample.attention_mask[:n], params, config
            )
            npt.assert_allclose(padded.data[:n], short.data, atol=1e-9)

    def test_attention_rows_sum_to_one(self):
        config = tiny_config(encoder_layers=2, attention_heads=2)
        params = init_params(config, seed=3)
        sample = tiny_sample(np.random.default_rng(4), config)
        _, records = encoder_forward(
            sample.subword_ids, sample.attention_mask, params, config, capture_attention=True
        )
        assert len(records) == 4
        for record in records:
            npt.assert_allclose(record.weights.sum(axis=1), 1.0, atol=1e-6)

    def test_all_masked_rejected(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        with pytest.raises(ValueError, match="all-zero"):
            encoder_forward(
                np.zeros(4, dtype=np.int64), np.zeros(4), params, config
            )


class TestCharCnnForward:
    def test_default_config_feature_length(self):
        config = HybridModelConfig(vocab_size=40, char_vocab_size=30)
        params = init_params(config, seed=0)
        chars = np.random.default_rng(0).integers(0, 30, size=256)
        feats = char_cnn_forward(chars, params, config)
        assert feats.shape == (192,)

    def test_all_pad_input_is_finite(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        feats = char_cnn_forward(np.zeros(config.max_char_len, dtype=np.int64), params, config)
        assert np.all(np.isfinite(feats.data))

    def test_wrong_length_rejected(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        with pytest.raises(ValueError, match="char_ids"):
            char_cnn_forward(np.zeros(7, dtype=np.int64), params, config)


class TestAttentionPool:
    def test_singleton_support_returns_that_state(self):
        config = tiny_config()
        params = init_params(config, seed=5)
        states = tc.Tensor(np.random.default_rng(6).normal(size=(4, config.hidden_dim)))
        mask = np.array([0.0, 0.0, 1.0, 0.0])
        pooled, weights = attention_pool(states, mask, params)
        npt.assert_array_equal(pooled.data, states.data[2])
        assert weights.data[2] == 1.0

    def test_identical_states_pool_to_that_state(self):
        config = tiny_config()
        params = init_params(config, seed=7)
        row = np.random.default_rng(8).normal(size=config.hidden_dim)
        states = tc.Tensor(np.tile(row, (5, 1)))
        pooled, _ = attention_pool(states, np.ones(5), params)
        npt.assert_allclose(pooled.data, row, atol=1e-12)

    def test_weights_are_masked_distribution(self):
        config = tiny_config()
        params = init_params(config, seed=9)
        states = tc.Tensor(np.random.default_rng(10).normal(size=(6, config.hidden_dim)))
        mask = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
        _, weights = attention_pool(states, mask, params)
        npt.assert_allclose(weights.data.sum(), 1.0, atol=1e-9)
        assert np.all(weights.data[3:] == 0.0)
        assert np.all(weights.data >= 0.0)

    def test_all_masked_rejected(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        states = tc.Tensor(np.zeros((3, config.hidden_dim)))
        with pytest.raises(ValueError, match="all-zero"):
            attention_pool(states, np.zeros(3), params)


class TestForward:
    def test_probs_are_distribution(self):
        config = tiny_config()
        params = init_params(config, seed=11)
        rng = np.random.default_rng(12)
        for _ in range(10):
            sample = tiny_sample(rng, config)
            logits, probs, records = forward(sample, params, config)
            assert records is None
            npt.assert_allclose(probs.data.sum(), 1.0, atol=1e-9)
            assert np.all((probs.data > 0.0) & (probs.data < 1.0))
            assert np.all(np.isfinite(logits.data))

    def test_eval_mode_deterministic(self):
        config = tiny_config(dropout_rate=0.1)
        params = init_params(config, seed=13)
        sample = tiny_sample(np.random.default_rng(14), config)
        logits1, _, _ = forward(sample, params, config, train=False)
        logits2, _, _ = forward(sample, params, config, train=False)
        assert np.array_equal(logits1.data, logits2.data)

    def test_train_mode_requires_rng(self):
        config = tiny_config(dropout_rate=0.1)
        params = init_params(config, seed=13)
        sample = tiny_sample(np.random.default_rng(14), config)
        with pytest.raises(ValueError, match="rng"):
            forward(sample, params, config, train=True)

    def test_padding_invariance_of_logits(self):
        config = tiny_config()
        params = init_params(config, seed=15)
        rng = np.random.default_rng(16)
        for _ in range(20):
            sample = tiny_sample(rng, config, n_real=int(rng.integers(2, 7)))
            full, _, _ = forward(sample, params, config)
            trimmed, _, _ = forward(trim_sample(sample), params, config)
            npt.assert_allclose(full.data, trimmed.data, atol=1e-8)


class TestPredict:
    def _forced_logit_params(self, config, bias):
        params = init_params(config, seed=0)
        params["classifier.w"].data[:] = 0.0
        params["classifier.b"].data[:] = bias
        return params

    @pytest.mark.parametrize(
        "bias,expected",
        [([2.0, 0.0, 0.0], 0), ([1.0, 1.0, 1.0], 0), ([0.0, 0.0, 3.0], 2)],
    )
    def test_argmax_with_tie_toward_lowest_index(self, bias, expected):
        config = tiny_config()
        params = self._forced_logit_params(config, bias)
        sample = tiny_sample(np.random.default_rng(17), config)
        assert predict(sample, params, config) == expected

    def test_shift_invariance_of_argmax(self):
        config = tiny_config()
        params = init_params(config, seed=18)
        sample = tiny_sample(np.random.default_rng(19), config)
        logits, _, _ = forward(sample, params, config)
        shifted = logits.data + 123.456
        assert int(np.argmax(shifted)) == predict(sample, params, config)


class TestExportAttentionMap:
    def test_restriction_and_normalization(self):
        config = tiny_config(encoder_layers=2, attention_heads=2)
        params = init_params(config, seed=20)
        sample = tiny_sample(np.random.default_rng(21), config, n_real=6)
        record = export_attention_map(sample, params, config, layer=1, head=0)
        assert isinstance(record, AttentionRecord)
        assert record.weights.shape == (6, 6)
        npt.assert_allclose(record.weights.sum(axis=1), 1.0, atol=1e-6)
        assert len(record.tokens) == 6

    def test_token_strings_from_vocab(self):
        corpus = ["abab cdcd abab", "ab cd ab"]
        vocab = tx.train_subword_vocab(corpus, target_size=12)
        char_vocab = tx.build_char_vocab(corpus)
        config = tiny_config(vocab_size=len(vocab), char_vocab_size=len(char_vocab))
        params = init_params(config, seed=22)
        sample = tx.encode_sample(
            "ab cd", vocab, char_vocab,
            max_subword_len=config.max_subword_len, max_char_len=config.max_char_len,
        )
        record = export_attention_map(sample, params, config, 0, 0, vocab=vocab)
        assert record.tokens[0] == "<CLS>"
        assert record.tokens[-1] == "<SEP>"
        assert "ab" in record.tokens

    def test_out_of_range_layer_and_head(self):
        config = tiny_config()
        params = init_params(config, seed=0)
        sample = tiny_sample(np.random.default_rng(23), config)
        with pytest.raises(ValueError, match="layer"):
            export_attention_map(sample, params, config, layer=1, head=0)
        with pytest.raises(ValueError, match="head"):
            export_attention_map(sample, params, config, layer=0, head=5)


class TestEndToEndGradients:
    def test_every_parameter_passes_finite_difference_check(self):
        config = tiny_config()
        params = init_params(config, seed=24)
        sample = tiny_sample(np.random.default_rng(25), config, label=1)

        def loss():
            _, probs, _ = forward(sample, params, config, train=False)
            return tc.scale(tc.log(tc.clamp_min(tc.pick(probs, sample.label), 1e-12)), -1.0)

        for p in params:
            err = tc.grad_check(loss, p, h=1e-5)
            assert err <= 1e-4, f"{p.name}: {err}"
