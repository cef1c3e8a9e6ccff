"""Training loop, AdamW optimizer, loss, evaluation, and cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as tc
from .metrics import LABELS, EvalReport, classification_report
from .model import HybridModelConfig, HybridModelParams, forward, init_params, predict, trim_sample
from .tensor import Parameter, Tensor
from .text import EncodedSample

__all__ = [
    "TrainConfig",
    "OptimizerState",
    "EpochTrace",
    "cross_entropy",
    "adamw_step",
    "train",
    "evaluate",
    "stratified_kfold",
    "cross_validate",
]


@dataclass
class TrainConfig:
    """Optimization hyperparameters and data-split policy."""

    epochs: int = 3
    batch_size: int = 16
    seed: int = 0
    eta: float = 2e-5  # AdamW learning rate
    weight_decay: float = 0.01
    split_fraction: float = 0.8  # train share of the stratified split

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValueError(f"split_fraction must be in (0, 1), got {self.split_fraction}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")


@dataclass
class OptimizerState:
    """AdamW moment estimates and hyperparameters."""

    eta: float = 2e-5
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass(frozen=True)
class EpochTrace:
    """Per-epoch mean training and validation losses, plus the held-out indices."""

    train_losses: tuple[float, ...]
    val_losses: tuple[float, ...]
    val_indices: tuple[int, ...]


def cross_entropy(probs: Tensor, true_label: int) -> Tensor:
    """Negative log probability of the true class.

    The selected probability is clamped below at 1e-12 before the log so a
    saturated softmax cannot produce an infinite loss.  Differentiating
    through the softmax producing ``probs`` yields the classic
    ``probs - onehot`` gradient at the logits.
    """
    if not 0 <= true_label < probs.shape[0]:
        raise ValueError(f"label {true_label} out of range for {probs.shape[0]} classes")
    return tc.scale(tc.log(tc.clamp_min(tc.pick(probs, true_label), 1e-12)), -1.0)


def adamw_step(params: list[Parameter], state: OptimizerState) -> None:
    """One AdamW update from the gradients stored on ``params``.

    Bias-corrected moments drive the adaptive step; weight decay is
    decoupled and applied to the pre-update parameter values:
    ``theta -= eta * mhat / (sqrt(vhat) + eps) + eta * lambda * theta``.
    """
    params = list(params)
    for p in params:
        if not np.isfinite(p.grad).all():
            raise ValueError(f"non-finite gradient in parameter {p.name!r}")
    state.t += 1
    bias1 = 1.0 - state.beta1**state.t
    bias2 = 1.0 - state.beta2**state.t
    for p in params:
        g = p.grad
        m = state.m.setdefault(p.name, np.zeros_like(p.data))
        v = state.v.setdefault(p.name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= state.eta * (m_hat / (np.sqrt(v_hat) + state.eps)) + (
            state.eta * state.weight_decay * p.data
        )


def _class_indices(labels: np.ndarray, n_classes: int) -> list[np.ndarray]:
    return [np.flatnonzero(labels == c) for c in range(n_classes)]


def stratified_split(
    labels: list[int] | np.ndarray,
    fraction: float,
    rng: np.random.Generator,
    n_classes: int = 3,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split keeping ``fraction`` of each class for training."""
    labels = np.asarray(labels)
    train_parts, val_parts = [], []
    for idx in _class_indices(labels, n_classes):
        if idx.size < 2:
            raise ValueError("every class needs at least 2 samples to split")
        shuffled = rng.permutation(idx)
        n_train = int(round(idx.size * fraction))
        n_train = min(max(n_train, 1), idx.size - 1)
        train_parts.append(shuffled[:n_train])
        val_parts.append(shuffled[n_train:])
    return np.sort(np.concatenate(train_parts)), np.sort(np.concatenate(val_parts))


def _mean_eval_loss(
    samples: list[EncodedSample],
    params: HybridModelParams,
    model_config: HybridModelConfig,
) -> float:
    total = 0.0
    for sample in samples:
        _, probs, _ = forward(sample, params, model_config, train=False)
        total += cross_entropy(probs, sample.label).item()
    return total / len(samples)


def train(
    dataset: list[EncodedSample],
    params: HybridModelParams,
    model_config: HybridModelConfig,
    train_config: TrainConfig,
) -> tuple[HybridModelParams, EpochTrace]:
    """Mini-batch AdamW training with an internal stratified holdout.

    Each epoch reshuffles the training indices, averages gradients over
    batches, and records the mean training loss and the end-of-epoch
    validation loss.  Fully deterministic given ``train_config.seed``.
    """
    labels = np.asarray([s.label for s in dataset])
    counts = np.bincount(labels, minlength=model_config.num_classes)
    if np.any(counts < 2):
        missing = [LABELS[c] for c in np.flatnonzero(counts < 2)]
        raise ValueError(f"every class needs at least 2 samples; short: {missing}")

    rng = np.random.default_rng(train_config.seed)
    train_idx, val_idx = stratified_split(
        labels, train_config.split_fraction, rng, n_classes=model_config.num_classes
    )
    if len(set(labels[train_idx])) < model_config.num_classes:
        raise ValueError("a class is missing from the training split")

    trimmed = [trim_sample(s) for s in dataset]
    train_samples = [trimmed[i] for i in train_idx]
    val_samples = [trimmed[i] for i in val_idx]

    state = OptimizerState(eta=train_config.eta, weight_decay=train_config.weight_decay)
    param_list = list(params)
    train_losses, val_losses = [], []
    for _ in range(train_config.epochs):
        order = rng.permutation(len(train_samples))
        epoch_loss = 0.0
        for start in range(0, len(order), train_config.batch_size):
            batch = [train_samples[i] for i in order[start : start + train_config.batch_size]]
            tc.zero_grads(param_list)
            losses = []
            for sample in batch:
                _, probs, _ = forward(sample, params, model_config, train=True, rng=rng)
                losses.append(cross_entropy(probs, sample.label))
            batch_loss = tc.scale(tc.add_n(losses), 1.0 / len(batch))
            batch_loss.backward()
            adamw_step(param_list, state)
            epoch_loss += batch_loss.item() * len(batch)
        train_losses.append(epoch_loss / len(train_samples))
        val_losses.append(_mean_eval_loss(val_samples, params, model_config))

    trace = EpochTrace(
        train_losses=tuple(train_losses),
        val_losses=tuple(val_losses),
        val_indices=tuple(int(i) for i in val_idx),
    )
    return params, trace


def evaluate(
    dataset: list[EncodedSample],
    params: HybridModelParams,
    model_config: HybridModelConfig,
) -> EvalReport:
    """Classification report for the model on a dataset."""
    if not dataset:
        raise ValueError("cannot evaluate an empty dataset")
    y_true = [s.label for s in dataset]
    y_pred = [predict(trim_sample(s), params, model_config) for s in dataset]
    return classification_report(y_true, y_pred, n_classes=model_config.num_classes)


def stratified_kfold(
    labels: list[int] | np.ndarray,
    k: int = 5,
    seed: int = 0,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic stratified folds: per-class shuffle, then round-robin deal.

    The round-robin position carries over from one class to the next so the
    fold sizes themselves stay within one sample of each other.  Returns k
    (train_indices, val_indices) pairs whose validation sets partition the
    index set.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = np.random.default_rng(seed)
    classes = np.unique(labels)
    fold_members: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in classes:
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise ValueError(f"class {c} has {idx.size} samples, fewer than k={k}")
        shuffled = rng.permutation(idx)
        for j, i in enumerate(shuffled):
            fold_members[(offset + j) % k].append(int(i))
        offset = (offset + idx.size) % k

    all_indices = np.arange(labels.size)
    folds = []
    for members in fold_members:
        val = np.sort(np.asarray(members, dtype=np.int64))
        train = np.setdiff1d(all_indices, val)
        folds.append((train, val))
    return folds


def cross_validate(
    dataset: list[EncodedSample],
    model_config: HybridModelConfig,
    train_config: TrainConfig,
    k: int = 5,
) -> tuple[list[EvalReport], float]:
    """k-fold cross-validation with fresh, fold-seeded parameters per fold."""
    labels = [s.label for s in dataset]
    folds = stratified_kfold(labels, k=k, seed=train_config.seed)
    reports = []
    for fold_index, (train_idx, val_idx) in enumerate(folds):
        params = init_params(model_config, seed=train_config.seed + fold_index)
        train([dataset[i] for i in train_idx], params, model_config, train_config)
        reports.append(evaluate([dataset[i] for i in val_idx], params, model_config))
    mean_accuracy = float(np.mean([r.accuracy for r in reports]))
    return reports, mean_accuracy
