"""Hybrid SMS classifier: subword transformer encoder + character CNN.

Token-level context comes from a small post-norm transformer encoder over
subword ids; character-level morphology comes from a multi-width
convolutional network with max-over-time pooling.  Encoder states are
reduced by additive attention pooling, concatenated with the CNN features,
and classified through a fused dense head into three classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from . import tensor as tc
from .tensor import Parameter, Tensor
from .text import MAX_CHAR_LEN, MAX_SUBWORD_LEN, EncodedSample, SubwordVocab

__all__ = [
    "HybridModelConfig",
    "HybridModelParams",
    "AttentionRecord",
    "init_params",
    "encoder_forward",
    "char_cnn_forward",
    "attention_pool",
    "forward",
    "predict",
    "export_attention_map",
    "trim_sample",
]


@dataclass(frozen=True)
class HybridModelConfig:
    """Architecture hyperparameters; defaults give the desk-scale model."""

    vocab_size: int
    char_vocab_size: int
    hidden_dim: int = 128
    encoder_layers: int = 2
    attention_heads: int = 4
    ff_dim: int = 256
    char_embed_dim: int = 32
    cnn_filter_widths: tuple[int, ...] = (3, 4, 5)
    cnn_filters_per_width: int = 64
    fusion_dim: int = 128
    num_classes: int = 3
    dropout_rate: float = 0.1
    max_subword_len: int = MAX_SUBWORD_LEN
    max_char_len: int = MAX_CHAR_LEN

    def __post_init__(self):
        object.__setattr__(self, "cnn_filter_widths", tuple(self.cnn_filter_widths))
        positive = {
            "vocab_size": self.vocab_size,
            "char_vocab_size": self.char_vocab_size,
            "hidden_dim": self.hidden_dim,
            "encoder_layers": self.encoder_layers,
            "attention_heads": self.attention_heads,
            "ff_dim": self.ff_dim,
            "char_embed_dim": self.char_embed_dim,
            "cnn_filters_per_width": self.cnn_filters_per_width,
            "fusion_dim": self.fusion_dim,
            "max_subword_len": self.max_subword_len,
            "max_char_len": self.max_char_len,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.hidden_dim % self.attention_heads != 0:
            raise ValueError(
                f"hidden_dim ({self.hidden_dim}) must be divisible by "
                f"attention_heads ({self.attention_heads})"
            )
        if self.num_classes != 3:
            raise ValueError(f"num_classes is fixed at 3, got {self.num_classes}")
        if not self.cnn_filter_widths:
            raise ValueError("cnn_filter_widths must be non-empty")
        if any(w <= 0 or w > self.max_char_len for w in self.cnn_filter_widths):
            raise ValueError(
                f"cnn_filter_widths must lie in [1, {self.max_char_len}], "
                f"got {self.cnn_filter_widths}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.attention_heads

    @property
    def char_feature_dim(self) -> int:
        return self.cnn_filters_per_width * len(self.cnn_filter_widths)


class HybridModelParams:
    """Insertion-ordered collection of uniquely named parameters."""

    def __init__(self, params: Sequence[Parameter]):
        self._params: dict[str, Parameter] = {}
        for p in params:
            if p.name in self._params:
                raise ValueError(f"duplicate parameter name {p.name!r}")
            self._params[p.name] = p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()


@dataclass(frozen=True)
class AttentionRecord:
    """Attention weights for one (layer, head), restricted to real tokens."""

    layer: int
    head: int
    weights: np.ndarray  # (n, n) rows sum to 1
    tokens: tuple[str, ...] = ()


def _glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    if len(shape) == 1:
        fan_in, fan_out = shape[0], 1
    elif len(shape) == 2:
        fan_in, fan_out = shape
    else:  # conv filters (F, width, E): receptive field in, filters out
        fan_in, fan_out = shape[1] * shape[2], shape[0]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(config: HybridModelConfig, seed: int) -> HybridModelParams:
    """Draw all weights Glorot-uniform; biases/LN-beta zero; LN-gamma one."""
    rng = np.random.default_rng(seed)
    h = config.hidden_dim
    params: list[Parameter] = [
        Parameter(_glorot(rng, (config.vocab_size, h)), "embed.subword"),
        Parameter(_glorot(rng, (config.max_subword_len, h)), "embed.position"),
    ]
    for layer in range(config.encoder_layers):
        prefix = f"layer{layer}"
        for proj in ("q", "k", "v", "o"):
            params.append(Parameter(_glorot(rng, (h, h)), f"{prefix}.attn.w{proj}"))
            params.append(Parameter(np.zeros(h), f"{prefix}.attn.b{proj}"))
        params.append(Parameter(np.ones(h), f"{prefix}.ln1.gamma"))
        params.append(Parameter(np.zeros(h), f"{prefix}.ln1.beta"))
        params.append(Parameter(_glorot(rng, (h, config.ff_dim)), f"{prefix}.ff.w1"))
        params.append(Parameter(np.zeros(config.ff_dim), f"{prefix}.ff.b1"))
        params.append(Parameter(_glorot(rng, (config.ff_dim, h)), f"{prefix}.ff.w2"))
        params.append(Parameter(np.zeros(h), f"{prefix}.ff.b2"))
        params.append(Parameter(np.ones(h), f"{prefix}.ln2.gamma"))
        params.append(Parameter(np.zeros(h), f"{prefix}.ln2.beta"))

    params.append(
        Parameter(_glorot(rng, (config.char_vocab_size, config.char_embed_dim)), "embed.char")
    )
    for width in config.cnn_filter_widths:
        shape = (config.cnn_filters_per_width, width, config.char_embed_dim)
        params.append(Parameter(_glorot(rng, shape), f"cnn.w{width}"))
        params.append(Parameter(np.zeros(config.cnn_filters_per_width), f"cnn.b{width}"))

    params.append(Parameter(_glorot(rng, (h, h)), "pool.w"))
    params.append(Parameter(np.zeros(h), "pool.b"))
    params.append(Parameter(_glorot(rng, (h,)), "pool.v"))

    fused = h + config.char_feature_dim
    params.append(Parameter(_glorot(rng, (fused, config.fusion_dim)), "fusion.w"))
    params.append(Parameter(np.zeros(config.fusion_dim), "fusion.b"))
    params.append(Parameter(_glorot(rng, (config.fusion_dim, config.num_classes)), "classifier.w"))
    params.append(Parameter(np.zeros(config.num_classes), "classifier.b"))
    return HybridModelParams(params)


def _linear(x: Tensor, w: Parameter, b: Parameter) -> Tensor:
    return tc.add(tc.matmul(x, w), b)


def encoder_forward(
    subword_ids: np.ndarray,
    mask: np.ndarray,
    params: HybridModelParams,
    config: HybridModelConfig,
    capture_attention: bool = False,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Tensor, list[AttentionRecord]]:
    """Run the transformer stack; returns (per-token states, attention records).

    Sequences shorter than ``config.max_subword_len`` are accepted; masked
    (padding) positions never receive attention weight, so states at real
    positions do not depend on how much padding follows them.
    """
    subword_ids = np.asarray(subword_ids)
    mask = np.asarray(mask, dtype=np.float64)
    t = subword_ids.shape[0]
    if mask.shape != (t,):
        raise ValueError(f"mask shape {mask.shape} does not match ids shape {subword_ids.shape}")
    if t > config.max_subword_len:
        raise ValueError(f"sequence length {t} exceeds max_subword_len {config.max_subword_len}")
    n_real = int(mask.sum())
    if n_real < 1:
        raise ValueError("attention mask is all-zero; at least one real token required")

    states = tc.add(
        tc.embedding_lookup(params["embed.subword"], subword_ids),
        tc.embedding_lookup(params["embed.position"], np.arange(t)),
    )
    if train and config.dropout_rate > 0.0:
        states = tc.dropout(states, config.dropout_rate, rng)

    key_mask = mask[np.newaxis, :]  # broadcasts over query rows
    records: list[AttentionRecord] = []
    inv_sqrt_dh = 1.0 / math.sqrt(config.head_dim)

    for layer in range(config.encoder_layers):
        prefix = f"layer{layer}"
        q = _linear(states, params[f"{prefix}.attn.wq"], params[f"{prefix}.attn.bq"])
        k = _linear(states, params[f"{prefix}.attn.wk"], params[f"{prefix}.attn.bk"])
        v = _linear(states, params[f"{prefix}.attn.wv"], params[f"{prefix}.attn.bv"])

        head_outputs = []
        for head in range(config.attention_heads):
            lo, hi = head * config.head_dim, (head + 1) * config.head_dim
            qh = tc.slice_cols(q, lo, hi)
            kh = tc.slice_cols(k, lo, hi)
            vh = tc.slice_cols(v, lo, hi)
            scores = tc.scale(tc.matmul(qh, tc.transpose(kh)), inv_sqrt_dh)
            attn = tc.softmax_masked(scores, key_mask)
            if capture_attention:
                records.append(
                    AttentionRecord(
                        layer=layer,
                        head=head,
                        weights=attn.data[:n_real, :n_real].copy(),
                    )
                )
            head_outputs.append(tc.matmul(attn, vh))

        context = tc.concat(head_outputs, axis=1)
        attn_out = _linear(context, params[f"{prefix}.attn.wo"], params[f"{prefix}.attn.bo"])
        states = tc.layer_norm(
            tc.add(states, attn_out),
            params[f"{prefix}.ln1.gamma"],
            params[f"{prefix}.ln1.beta"],
        )
        ff = _linear(
            tc.gelu(_linear(states, params[f"{prefix}.ff.w1"], params[f"{prefix}.ff.b1"])),
            params[f"{prefix}.ff.w2"],
            params[f"{prefix}.ff.b2"],
        )
        states = tc.layer_norm(
            tc.add(states, ff),
            params[f"{prefix}.ln2.gamma"],
            params[f"{prefix}.ln2.beta"],
        )

    return states, records


def char_cnn_forward(
    char_ids: np.ndarray,
    params: HybridModelParams,
    config: HybridModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Character features: embed, convolve per width, ReLU, max-over-time, concat."""
    char_ids = np.asarray(char_ids)
    if char_ids.shape != (config.max_char_len,):
        raise ValueError(
            f"char_ids must have shape ({config.max_char_len},), got {char_ids.shape}"
        )
    emb = tc.embedding_lookup(params["embed.char"], char_ids)
    if train and config.dropout_rate > 0.0:
        emb = tc.dropout(emb, config.dropout_rate, rng)
    pooled = []
    for width in config.cnn_filter_widths:
        conv = tc.conv1d(emb, params[f"cnn.w{width}"], params[f"cnn.b{width}"])
        pooled.append(tc.max_over_time(tc.relu(conv)))
    return tc.concat(pooled, axis=0)


def attention_pool(
    states: Tensor,
    mask: np.ndarray,
    params: HybridModelParams,
) -> tuple[Tensor, Tensor]:
    """Additive attention over token states.

    Scores each state with a small learned network, normalizes over real
    tokens, and returns (weighted state sum, weights).
    """
    mask = np.asarray(mask, dtype=np.float64)
    if int(mask.sum()) < 1:
        raise ValueError("attention mask is all-zero; at least one real token required")
    hidden = tc.tanh(_linear(states, params["pool.w"], params["pool.b"]))
    scores = tc.reshape(
        tc.matmul(hidden, tc.reshape(params["pool.v"], (params["pool.v"].size, 1))),
        (states.shape[0],),
    )
    weights = tc.softmax_masked(scores, mask)
    pooled = tc.reshape(
        tc.matmul(tc.reshape(weights, (1, states.shape[0])), states),
        (states.shape[1],),
    )
    return pooled, weights


def forward(
    sample: EncodedSample,
    params: HybridModelParams,
    config: HybridModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
    capture_attention: bool = False,
) -> tuple[Tensor, Tensor, list[AttentionRecord] | None]:
    """Full hybrid forward pass: returns (logits[3], probs[3], attention records)."""
    if train and config.dropout_rate > 0.0 and rng is None:
        raise ValueError("training-mode forward with dropout requires an rng")
    states, records = encoder_forward(
        sample.subword_ids,
        sample.attention_mask,
        params,
        config,
        capture_attention=capture_attention,
        train=train,
        rng=rng,
    )
    pooled, _ = attention_pool(states, sample.attention_mask, params)
    char_feats = char_cnn_forward(sample.char_ids, params, config, train=train, rng=rng)

    fused = tc.reshape(tc.concat([pooled, char_feats], axis=0), (1, -1))
    hidden = tc.gelu(_linear(fused, params["fusion.w"], params["fusion.b"]))
    if train and config.dropout_rate > 0.0:
        hidden = tc.dropout(hidden, config.dropout_rate, rng)
    logits = tc.reshape(
        _linear(hidden, params["classifier.w"], params["classifier.b"]),
        (config.num_classes,),
    )
    probs = tc.softmax_masked(logits, np.ones(config.num_classes))
    return logits, probs, (records if capture_attention else None)


def predict(
    sample: EncodedSample,
    params: HybridModelParams,
    config: HybridModelConfig,
) -> int:
    """Most probable class index; ties break toward the lowest index."""
    logits, _, _ = forward(sample, params, config, train=False)
    return int(np.argmax(logits.data))


def trim_sample(sample: EncodedSample) -> EncodedSample:
    """Drop subword padding (model outputs are invariant to it).

    Character ids keep their full fixed length: convolution windows over
    the padded tail contribute to max-over-time pooling, so the character
    sequence length is part of the model's definition.
    """
    n = int(sample.attention_mask.sum())
    return replace(
        sample,
        subword_ids=sample.subword_ids[:n],
        attention_mask=sample.attention_mask[:n],
    )


def export_attention_map(
    sample: EncodedSample,
    params: HybridModelParams,
    config: HybridModelConfig,
    layer: int,
    head: int,
    vocab: SubwordVocab | None = None,
) -> AttentionRecord:
    """Attention weights of one head restricted to real tokens, with token strings."""
    if not 0 <= layer < config.encoder_layers:
        raise ValueError(f"layer {layer} out of range [0, {config.encoder_layers})")
    if not 0 <= head < config.attention_heads:
        raise ValueError(f"head {head} out of range [0, {config.attention_heads})")
    _, _, records = forward(sample, params, config, train=False, capture_attention=True)
    record = next(r for r in records if r.layer == layer and r.head == head)
    n = record.weights.shape[0]
    if vocab is not None:
        tokens = tuple(vocab.id_to_token[int(i)] for i in sample.subword_ids[:n])
    else:
        tokens = tuple(f"id{int(i)}" for i in sample.subword_ids[:n])
    return replace(record, tokens=tokens)
