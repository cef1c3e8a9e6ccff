"""Command-line workflow: train, evaluate, cross-validate, predict, export.

Subcommands
-----------
train             fit the hybrid model, write checkpoint + loss curve
evaluate          score a checkpoint on a dataset, write report + confusion matrix
crossval          stratified k-fold cross-validation, write per-fold + mean results
predict           read texts (stdin or file), write label + class probabilities
baseline          fit a shallow baseline (naive Bayes or logistic regression)
export-attention  write one head's attention weights for a message as a matrix file
gen-synthetic     emit a seeded synthetic SMS corpus

All outputs are deterministic: two runs with identical flags and seed write
byte-identical files.  Every failure exits nonzero with a message on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import baselines as bl
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    baseline_from_checkpoint,
    checkpoint_from_baseline,
    checkpoint_from_hybrid,
    hybrid_from_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .data import gen_synthetic, load_dataset, save_dataset
from .metrics import LABELS, EvalReport, format_report
from .model import (
    HybridModelConfig,
    export_attention_map,
    forward,
    init_params,
    trim_sample,
)
from .text import build_char_vocab, clean_text, encode_sample, train_subword_vocab
from .training import TrainConfig, cross_validate, evaluate, stratified_split, train

__all__ = ["RunConfig", "main"]


@dataclass
class RunConfig:
    """One run's knobs: optimizer, architecture, data paths, and mode flags.

    Defaults (also the documented defaults of the JSON config file):
    dataset=None (required by data-driven subcommands), out="runs", seed=0;
    optimizer: epochs=3, batch_size=16, eta=2e-5, weight_decay=0.01,
    split_fraction=0.8; vocabulary: subword_vocab_size=500 (character
    vocabulary size always comes from the data); cross-validation: folds=5;
    architecture: hidden_dim=128, encoder_layers=2, attention_heads=4,
    ff_dim=256, char_embed_dim=32, cnn_filter_widths=(3,4,5),
    cnn_filters_per_width=64, fusion_dim=128, dropout_rate=0.1,
    max_subword_len=128, max_char_len=256.
    """

    dataset: str | None = None
    out: str = "runs"
    seed: int = 0
    epochs: int = 3
    batch_size: int = 16
    eta: float = 2e-5
    weight_decay: float = 0.01
    split_fraction: float = 0.8
    subword_vocab_size: int = 500
    folds: int = 5
    hidden_dim: int = 128
    encoder_layers: int = 2
    attention_heads: int = 4
    ff_dim: int = 256
    char_embed_dim: int = 32
    cnn_filter_widths: tuple[int, ...] = (3, 4, 5)
    cnn_filters_per_width: int = 64
    fusion_dim: int = 128
    dropout_rate: float = 0.1
    max_subword_len: int = 128
    max_char_len: int = 256

    def __post_init__(self):
        object.__setattr__(self, "cnn_filter_widths", tuple(self.cnn_filter_widths))
        if self.subword_vocab_size < 5:
            raise ValueError(
                f"subword_vocab_size must be >= 5, got {self.subword_vocab_size}"
            )
        if self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        # Fail fast on bad optimizer values; the architecture half is checked
        # once vocabulary sizes are known.
        self.train_config()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            eta=self.eta,
            weight_decay=self.weight_decay,
            split_fraction=self.split_fraction,
        )

    def model_config(self, vocab_size: int, char_vocab_size: int) -> HybridModelConfig:
        return HybridModelConfig(
            vocab_size=vocab_size,
            char_vocab_size=char_vocab_size,
            hidden_dim=self.hidden_dim,
            encoder_layers=self.encoder_layers,
            attention_heads=self.attention_heads,
            ff_dim=self.ff_dim,
            char_embed_dim=self.char_embed_dim,
            cnn_filter_widths=self.cnn_filter_widths,
            cnn_filters_per_width=self.cnn_filters_per_width,
            fusion_dim=self.fusion_dim,
            dropout_rate=self.dropout_rate,
            max_subword_len=self.max_subword_len,
            max_char_len=self.max_char_len,
        )


_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
# Command-line spelling of the config keys a flag may override.
_FLAG_TO_KEY = {"lr": "eta"}


def load_run_config(path: str | None, overrides: dict) -> RunConfig:
    """Defaults, overlaid by the JSON config file, overlaid by explicit flags."""
    values: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(raw) - _CONFIG_KEYS)
        if unknown:
            raise ValueError(
                f"unknown config keys {unknown}; valid keys: {sorted(_CONFIG_KEYS)}"
            )
        values.update(raw)
    for flag, value in overrides.items():
        if value is not None:
            values[_FLAG_TO_KEY.get(flag, flag)] = value
    return RunConfig(**values)


def _write_text(path: str, content: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def _format_float(x: float) -> str:
    return repr(float(x))


def _loss_curve_csv(train_losses, val_losses) -> str:
    lines = ["epoch,train_loss,val_loss"]
    for epoch, (tl, vl) in enumerate(zip(train_losses, val_losses), start=1):
        lines.append(f"{epoch},{_format_float(tl)},{_format_float(vl)}")
    return "\n".join(lines) + "\n"


def _confusion_csv(report: EvalReport) -> str:
    lines = ["," + ",".join(LABELS)]
    for i, label in enumerate(LABELS):
        row = ",".join(str(int(c)) for c in report.confusion[i])
        lines.append(f"{label},{row}")
    return "\n".join(lines) + "\n"


def _counts_line(counts: dict[str, int]) -> str:
    total = sum(counts.values())
    parts = ", ".join(f"{label}: {counts[label]}" for label in LABELS)
    return f"loaded {total} messages ({parts})"


def _prepare_corpus(records):
    texts = [clean_text(r.text) for r in records]
    labels = [r.label for r in records]
    return texts, labels


def _encode_all(texts, labels, subword_vocab, char_vocab, config: RunConfig):
    return [
        encode_sample(
            text, subword_vocab, char_vocab, label=label,
            max_subword_len=config.max_subword_len, max_char_len=config.max_char_len,
        )
        for text, label in zip(texts, labels)
    ]


def _require_dataset(config: RunConfig) -> str:
    if config.dataset is None:
        raise ValueError("a dataset is required; pass --dataset or set it in --config")
    return config.dataset


def cmd_train(config: RunConfig) -> int:
    records, counts = load_dataset(_require_dataset(config))
    print(_counts_line(counts))
    texts, labels = _prepare_corpus(records)

    subword_vocab = train_subword_vocab(texts, config.subword_vocab_size)
    char_vocab = build_char_vocab(texts)
    model_config = config.model_config(
        len(subword_vocab.id_to_token), len(char_vocab.id_to_char)
    )
    samples = _encode_all(texts, labels, subword_vocab, char_vocab, config)

    params = init_params(model_config, seed=config.seed)
    params, trace = train(samples, params, model_config, config.train_config())

    metadata = {
        "seed": config.seed,
        "epochs": config.epochs,
        "final_train_loss": trace.train_losses[-1],
        "final_val_loss": trace.val_losses[-1],
    }
    os.makedirs(config.out, exist_ok=True)
    ckpt_path = os.path.join(config.out, "model.ckpt")
    curve_path = os.path.join(config.out, "loss_curve.csv")
    save_checkpoint(
        ckpt_path,
        checkpoint_from_hybrid(params, model_config, subword_vocab, char_vocab, metadata),
    )
    _write_text(curve_path, _loss_curve_csv(trace.train_losses, trace.val_losses))

    for epoch, (tl, vl) in enumerate(zip(trace.train_losses, trace.val_losses), start=1):
        print(f"epoch {epoch}: train_loss={tl:.4f} val_loss={vl:.4f}")
    print(f"wrote {ckpt_path}")
    print(f"wrote {curve_path}")
    return 0


def _load_hybrid(path: str):
    return hybrid_from_checkpoint(load_checkpoint(path))


def cmd_evaluate(config: RunConfig, checkpoint_path: str) -> int:
    params, model_config, subword_vocab, char_vocab = _load_hybrid(checkpoint_path)
    records, counts = load_dataset(_require_dataset(config))
    print(_counts_line(counts))
    texts, labels = _prepare_corpus(records)
    samples = [
        encode_sample(
            text, subword_vocab, char_vocab, label=label,
            max_subword_len=model_config.max_subword_len,
            max_char_len=model_config.max_char_len,
        )
        for text, label in zip(texts, labels)
    ]
    report = evaluate(samples, params, model_config)

    os.makedirs(config.out, exist_ok=True)
    report_path = os.path.join(config.out, "report.txt")
    confusion_path = os.path.join(config.out, "confusion_matrix.csv")
    _write_text(report_path, format_report(report))
    _write_text(confusion_path, _confusion_csv(report))
    print(format_report(report), end="")
    print(f"wrote {report_path}")
    print(f"wrote {confusion_path}")
    return 0


def cmd_crossval(config: RunConfig) -> int:
    records, counts = load_dataset(_require_dataset(config))
    print(_counts_line(counts))
    texts, labels = _prepare_corpus(records)

    subword_vocab = train_subword_vocab(texts, config.subword_vocab_size)
    char_vocab = build_char_vocab(texts)
    model_config = config.model_config(
        len(subword_vocab.id_to_token), len(char_vocab.id_to_char)
    )
    samples = _encode_all(texts, labels, subword_vocab, char_vocab, config)

    reports, mean_accuracy = cross_validate(
        samples, model_config, config.train_config(), k=config.folds
    )

    blocks = []
    csv_lines = ["fold,accuracy"]
    for i, report in enumerate(reports, start=1):
        blocks.append(f"=== fold {i} ===\n{format_report(report)}")
        csv_lines.append(f"{i},{_format_float(report.accuracy)}")
        print(f"fold {i}: accuracy={report.accuracy:.4f}")
    blocks.append(f"mean accuracy: {_format_float(mean_accuracy)}\n")
    csv_lines.append(f"mean,{_format_float(mean_accuracy)}")
    print(f"mean accuracy: {mean_accuracy:.4f}")

    os.makedirs(config.out, exist_ok=True)
    report_path = os.path.join(config.out, "crossval_report.txt")
    csv_path = os.path.join(config.out, "crossval.csv")
    _write_text(report_path, "\n".join(blocks))
    _write_text(csv_path, "\n".join(csv_lines) + "\n")
    print(f"wrote {report_path}")
    print(f"wrote {csv_path}")
    return 0


def cmd_predict(config: RunConfig, checkpoint_path: str, input_path: str | None) -> int:
    params, model_config, subword_vocab, char_vocab = _load_hybrid(checkpoint_path)
    if input_path is None:
        raw = sys.stdin.read()
    else:
        with open(input_path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    for line in raw.splitlines():
        sample = trim_sample(
            encode_sample(
                line, subword_vocab, char_vocab,
                max_subword_len=model_config.max_subword_len,
                max_char_len=model_config.max_char_len,
            )
        )
        _, probs, _ = forward(sample, params, model_config, train=False)
        label = LABELS[int(np.argmax(probs.data))]
        formatted = " ".join(f"{p:.6f}" for p in probs.data)
        print(f"{label}\t{formatted}")
    return 0


def cmd_baseline(config: RunConfig, model_name: str) -> int:
    records, counts = load_dataset(_require_dataset(config))
    print(_counts_line(counts))
    texts, labels = _prepare_corpus(records)
    labels_arr = np.asarray(labels)

    rng = np.random.default_rng(config.seed)
    train_idx, val_idx = stratified_split(labels_arr, config.split_fraction, rng)
    train_texts = [texts[i] for i in train_idx]
    train_labels = labels_arr[train_idx]
    val_texts = [texts[i] for i in val_idx]
    val_labels = labels_arr[val_idx]

    featurizer = bl.fit_bow_featurizer(train_texts)
    if model_name == "nb":
        model = bl.train_naive_bayes(
            train_texts, train_labels, featurizer, n_classes=len(LABELS)
        )
    else:
        model = bl.train_logreg(
            train_texts, train_labels, featurizer, n_classes=len(LABELS)
        )
    report = bl.evaluate_baseline(model, val_texts, val_labels)

    os.makedirs(config.out, exist_ok=True)
    stem = f"baseline_{model_name}"
    ckpt_path = os.path.join(config.out, f"{stem}.ckpt")
    report_path = os.path.join(config.out, f"{stem}_report.txt")
    confusion_path = os.path.join(config.out, f"{stem}_confusion.csv")
    metadata = {"seed": config.seed, "split_fraction": config.split_fraction}
    save_checkpoint(ckpt_path, checkpoint_from_baseline(model, metadata))
    _write_text(report_path, format_report(report))
    _write_text(confusion_path, _confusion_csv(report))
    print(format_report(report), end="")
    print(f"wrote {ckpt_path}")
    print(f"wrote {report_path}")
    print(f"wrote {confusion_path}")
    return 0


def cmd_export_attention(
    config: RunConfig, checkpoint_path: str, text: str, layer: int, head: int
) -> int:
    params, model_config, subword_vocab, char_vocab = _load_hybrid(checkpoint_path)
    sample = encode_sample(
        text, subword_vocab, char_vocab,
        max_subword_len=model_config.max_subword_len,
        max_char_len=model_config.max_char_len,
    )
    record = export_attention_map(
        sample, params, model_config, layer, head, vocab=subword_vocab
    )
    lines = ["," + ",".join(record.tokens)]
    for token, row in zip(record.tokens, record.weights):
        lines.append(token + "," + ",".join(_format_float(w) for w in row))

    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, "attention_map.csv")
    _write_text(path, "\n".join(lines) + "\n")
    print(f"wrote {path} ({len(record.tokens)} tokens, layer {layer}, head {head})")
    return 0


def cmd_gen_synthetic(
    config: RunConfig, n_normal: int, n_promo: int, n_smish: int
) -> int:
    records = gen_synthetic(
        n_normal=n_normal, n_promo=n_promo, n_smish=n_smish, seed=config.seed
    )
    os.makedirs(config.out, exist_ok=True)
    path = os.path.join(config.out, "synthetic.csv")
    save_dataset(path, records)
    print(
        f"wrote {path} (Normal: {n_normal}, Promo: {n_promo}, Smish: {n_smish}, "
        f"seed {config.seed})"
    )
    return 0


def _add_common_flags(parser: argparse.ArgumentParser, with_dataset: bool = True):
    parser.add_argument("--config", help="JSON config file (RunConfig keys)")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--lr", type=float, help="AdamW learning rate (overrides config)")
    parser.add_argument("--epochs", type=int, help="training epochs (overrides config)")
    parser.add_argument("--out", help="output directory (default: runs)")
    if with_dataset:
        parser.add_argument("--dataset", help="dataset file (label,text header)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smishnet",
        description="Hybrid Bangla SMS smishing classifier: training and inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the hybrid model")
    _add_common_flags(p)

    p = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    _add_common_flags(p)
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")

    p = sub.add_parser("crossval", help="stratified k-fold cross-validation")
    _add_common_flags(p)
    p.add_argument("--folds", type=int, help="number of folds (default: 5)")

    p = sub.add_parser("predict", help="classify texts from stdin or a file")
    _add_common_flags(p, with_dataset=False)
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    p.add_argument("--input", help="text file, one message per line (default: stdin)")

    p = sub.add_parser("baseline", help="fit a shallow baseline model")
    _add_common_flags(p)
    p.add_argument(
        "--model", required=True, choices=("nb", "logreg"),
        help="nb = naive Bayes, logreg = logistic regression",
    )

    p = sub.add_parser("export-attention", help="export one head's attention weights")
    _add_common_flags(p, with_dataset=False)
    p.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    p.add_argument("--text", required=True, help="message to analyze")
    p.add_argument("--layer", type=int, default=0, help="encoder layer (default: 0)")
    p.add_argument("--head", type=int, default=0, help="attention head (default: 0)")

    p = sub.add_parser("gen-synthetic", help="emit a seeded synthetic corpus")
    _add_common_flags(p, with_dataset=False)
    p.add_argument("--n-normal", type=int, default=600, help="Normal messages (default: 600)")
    p.add_argument("--n-promo", type=int, default=300, help="Promo messages (default: 300)")
    p.add_argument("--n-smish", type=int, default=600, help="Smish messages (default: 600)")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key, None)
        for key in ("dataset", "seed", "lr", "epochs", "out", "folds")
    }
    try:
        config = load_run_config(args.config, overrides)
        if args.command == "train":
            return cmd_train(config)
        if args.command == "evaluate":
            return cmd_evaluate(config, args.checkpoint)
        if args.command == "crossval":
            return cmd_crossval(config)
        if args.command == "predict":
            return cmd_predict(config, args.checkpoint, args.input)
        if args.command == "baseline":
            return cmd_baseline(config, args.model)
        if args.command == "export-attention":
            return cmd_export_attention(
                config, args.checkpoint, args.text, args.layer, args.head
            )
        if args.command == "gen-synthetic":
            return cmd_gen_synthetic(config, args.n_normal, args.n_promo, args.n_smish)
        raise ValueError(f"unknown command {args.command!r}")
    except (CheckpointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
