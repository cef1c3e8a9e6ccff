"""Binary checkpoint container with bit-exact round-tripping.

Layout: 8 magic bytes, a little-endian uint32 format version, a uint64
header length, a UTF-8 JSON header (kind, config, vocabularies, metadata,
parameter manifest), then one length-prefixed float64 little-endian array
per manifest entry.  Every load failure mode has its own exception type so
callers can distinguish wrong-file from wrong-version from corruption.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .baselines import BowFeaturizer, LogRegModel, NaiveBayesModel
from .model import HybridModelConfig, HybridModelParams
from .tensor import Parameter
from .text import CharVocab, SubwordVocab

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "NotACheckpointError",
    "VersionMismatchError",
    "TruncatedCheckpointError",
    "ShapeMismatchError",
    "ModelKindError",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_from_hybrid",
    "hybrid_from_checkpoint",
    "checkpoint_from_baseline",
    "baseline_from_checkpoint",
]

MAGIC = b"SMSHCKPT"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Base class for checkpoint load failures."""


class NotACheckpointError(CheckpointError):
    """The file does not start with the checkpoint magic bytes."""


class VersionMismatchError(CheckpointError):
    """The file uses an unsupported format version."""


class TruncatedCheckpointError(CheckpointError):
    """The file ended before all declared bytes were read, or has extra bytes."""


class ShapeMismatchError(CheckpointError):
    """A stored array's length disagrees with its declared shape."""


class ModelKindError(CheckpointError):
    """The checkpoint holds a different model kind than the caller expects."""


@dataclass
class Checkpoint:
    """Everything needed to reconstruct a trained model."""

    kind: str  # "hybrid", "naive_bayes", or "logreg"
    config: dict
    vocabularies: dict
    arrays: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)


def save_checkpoint(path, checkpoint: Checkpoint) -> None:
    header = {
        "kind": checkpoint.kind,
        "config": checkpoint.config,
        "vocabularies": checkpoint.vocabularies,
        "metadata": checkpoint.metadata,
        "parameters": [
            {"name": name, "shape": list(array.shape)}
            for name, array in checkpoint.arrays.items()
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        for array in checkpoint.arrays.values():
            flat = np.ascontiguousarray(array, dtype=np.float64).reshape(-1)
            fh.write(struct.pack("<Q", flat.size))
            fh.write(flat.astype("<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    chunk = fh.read(n)
    if len(chunk) != n:
        raise TruncatedCheckpointError(
            f"checkpoint truncated while reading {what}: wanted {n} bytes, got {len(chunk)}"
        )
    return chunk


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise NotACheckpointError(f"{path} is not a checkpoint file (bad magic {magic!r})")
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "format version"))
        if version != FORMAT_VERSION:
            raise VersionMismatchError(
                f"checkpoint format version {version} unsupported (expected {FORMAT_VERSION})"
            )
        (header_len,) = struct.unpack("<Q", _read_exact(fh, 8, "header length"))
        try:
            header = json.loads(_read_exact(fh, header_len, "header"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"corrupt checkpoint header: {exc}") from None

        arrays: dict[str, np.ndarray] = {}
        for entry in header["parameters"]:
            name, shape = entry["name"], tuple(entry["shape"])
            (count,) = struct.unpack("<Q", _read_exact(fh, 8, f"length of {name!r}"))
            expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
            if count != expected:
                raise ShapeMismatchError(
                    f"array {name!r} declares shape {shape} ({expected} values) "
                    f"but stores {count}"
                )
            raw = _read_exact(fh, count * 8, f"data of {name!r}")
            arrays[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        trailing = fh.read(1)
        if trailing:
            raise TruncatedCheckpointError("checkpoint has trailing bytes after the last array")

    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        vocabularies=header["vocabularies"],
        arrays=arrays,
        metadata=header.get("metadata", {}),
    )


def checkpoint_from_hybrid(
    params: HybridModelParams,
    config: HybridModelConfig,
    subword_vocab: SubwordVocab,
    char_vocab: CharVocab,
    metadata: dict | None = None,
) -> Checkpoint:
    config_dict = {
        "vocab_size": config.vocab_size,
        "char_vocab_size": config.char_vocab_size,
        "hidden_dim": config.hidden_dim,
        "encoder_layers": config.encoder_layers,
        "attention_heads": config.attention_heads,
        "ff_dim": config.ff_dim,
        "char_embed_dim": config.char_embed_dim,
        "cnn_filter_widths": list(config.cnn_filter_widths),
        "cnn_filters_per_width": config.cnn_filters_per_width,
        "fusion_dim": config.fusion_dim,
        "num_classes": config.num_classes,
        "dropout_rate": config.dropout_rate,
        "max_subword_len": config.max_subword_len,
        "max_char_len": config.max_char_len,
    }
    vocabularies = {
        "subword": {
            "tokens": subword_vocab.id_to_token,
            "target_size": subword_vocab.max_vocab_size,
        },
        "char": {"tokens": char_vocab.id_to_char},
    }
    arrays = {name: p.data for name, p in params.items()}
    return Checkpoint(
        kind="hybrid",
        config=config_dict,
        vocabularies=vocabularies,
        arrays=arrays,
        metadata=metadata or {},
    )


def hybrid_from_checkpoint(
    checkpoint: Checkpoint,
) -> tuple[HybridModelParams, HybridModelConfig, SubwordVocab, CharVocab]:
    if checkpoint.kind != "hybrid":
        raise ModelKindError(
            f"expected a hybrid-model checkpoint, found kind {checkpoint.kind!r}"
        )
    config = HybridModelConfig(**checkpoint.config)
    subword_tokens = checkpoint.vocabularies["subword"]["tokens"]
    subword_vocab = SubwordVocab(
        token_to_id={t: i for i, t in enumerate(subword_tokens)},
        id_to_token=list(subword_tokens),
        max_vocab_size=int(checkpoint.vocabularies["subword"]["target_size"]),
    )
    char_tokens = checkpoint.vocabularies["char"]["tokens"]
    char_vocab = CharVocab(
        char_to_id={ch: i for i, ch in enumerate(char_tokens) if i >= 2},
        id_to_char=list(char_tokens),
    )
    params = HybridModelParams(
        [Parameter(array.copy(), name) for name, array in checkpoint.arrays.items()]
    )
    return params, config, subword_vocab, char_vocab


def checkpoint_from_baseline(
    model: NaiveBayesModel | LogRegModel,
    metadata: dict | None = None,
) -> Checkpoint:
    tokens = sorted(model.featurizer.token_to_index, key=model.featurizer.token_to_index.get)
    vocabularies = {"bow": {"tokens": tokens}}
    if isinstance(model, NaiveBayesModel):
        kind = "naive_bayes"
        config = {"n_classes": int(model.class_log_prior.size)}
        arrays = {
            "idf": model.featurizer.idf,
            "class_log_prior": model.class_log_prior,
            "token_log_prob": model.token_log_prob,
        }
    elif isinstance(model, LogRegModel):
        kind = "logreg"
        config = {"n_classes": int(model.bias.size)}
        arrays = {
            "idf": model.featurizer.idf,
            "weights": model.weights,
            "bias": model.bias,
            "loss_trace": np.asarray(model.loss_trace, dtype=np.float64),
        }
    else:
        raise TypeError(f"unsupported baseline model type {type(model).__name__}")
    return Checkpoint(
        kind=kind,
        config=config,
        vocabularies=vocabularies,
        arrays=arrays,
        metadata=metadata or {},
    )


def baseline_from_checkpoint(checkpoint: Checkpoint) -> NaiveBayesModel | LogRegModel:
    if checkpoint.kind not in ("naive_bayes", "logreg"):
        raise ModelKindError(
            f"expected a baseline checkpoint, found kind {checkpoint.kind!r}"
        )
    tokens = checkpoint.vocabularies["bow"]["tokens"]
    featurizer = BowFeaturizer(
        token_to_index={t: i for i, t in enumerate(tokens)},
        idf=checkpoint.arrays["idf"].copy(),
    )
    if checkpoint.kind == "naive_bayes":
        return NaiveBayesModel(
            featurizer=featurizer,
            class_log_prior=checkpoint.arrays["class_log_prior"].copy(),
            token_log_prob=checkpoint.arrays["token_log_prob"].copy(),
        )
    return LogRegModel(
        featurizer=featurizer,
        weights=checkpoint.arrays["weights"].copy(),
        bias=checkpoint.arrays["bias"].copy(),
        loss_trace=tuple(float(x) for x in checkpoint.arrays["loss_trace"]),
    )
