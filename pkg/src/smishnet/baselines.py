"""Bag-of-words baselines: multinomial naive Bayes and logistic regression.

Both models share the metrics implementation with the hybrid model so all
reported numbers come from a single code path.  Features are dense vectors
over a whitespace-token vocabulary (they are mostly zeros; desk-scale
vocabularies make dense storage simplest).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tensor as tc
from .metrics import EvalReport, classification_report

__all__ = [
    "BowFeaturizer",
    "fit_bow_featurizer",
    "count_vector",
    "featurize",
    "NaiveBayesModel",
    "train_naive_bayes",
    "LogRegModel",
    "train_logreg",
    "evaluate_baseline",
]


@dataclass(frozen=True)
class BowFeaturizer:
    """Token vocabulary with smoothed idf weights."""

    token_to_index: dict[str, int]
    idf: np.ndarray

    def __len__(self) -> int:
        return len(self.token_to_index)


def fit_bow_featurizer(texts: Sequence[str], min_df: int = 2) -> BowFeaturizer:
    """Build a vocabulary of whitespace tokens appearing in >= min_df documents.

    Tokens are indexed in sorted order; idf(t) = ln((1+N)/(1+df(t))) + 1.
    """
    if not texts:
        raise ValueError("cannot fit a featurizer on an empty corpus")
    df: dict[str, int] = {}
    for text in texts:
        for token in set(text.split()):
            df[token] = df.get(token, 0) + 1
    kept = sorted(token for token, count in df.items() if count >= min_df)
    token_to_index = {token: i for i, token in enumerate(kept)}
    n = len(texts)
    idf = np.array([np.log((1 + n) / (1 + df[token])) + 1.0 for token in kept])
    return BowFeaturizer(token_to_index=token_to_index, idf=idf)


def count_vector(text: str, featurizer: BowFeaturizer) -> np.ndarray:
    """Raw token counts over the vocabulary; out-of-vocabulary tokens ignored."""
    counts = np.zeros(len(featurizer))
    for token in text.split():
        index = featurizer.token_to_index.get(token)
        if index is not None:
            counts[index] += 1.0
    return counts


def featurize(text: str, featurizer: BowFeaturizer) -> np.ndarray:
    """tf-idf weighted counts; empty or fully out-of-vocabulary text → zero vector."""
    return count_vector(text, featurizer) * featurizer.idf


def _check_classes(labels: np.ndarray, n_classes: int | None) -> int:
    if labels.size == 0:
        raise ValueError("no training samples")
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=n_classes)
    missing = np.flatnonzero(counts == 0)
    if missing.size:
        raise ValueError(f"class {missing[0]} has no training samples")
    return n_classes


@dataclass(frozen=True)
class NaiveBayesModel:
    """Multinomial naive Bayes over raw token counts."""

    featurizer: BowFeaturizer
    class_log_prior: np.ndarray  # (n_classes,)
    token_log_prob: np.ndarray  # (n_classes, vocab)

    def predict_counts(self, counts: np.ndarray) -> int:
        scores = self.class_log_prior + self.token_log_prob @ counts
        return int(np.argmax(scores))

    def predict_text(self, text: str) -> int:
        return self.predict_counts(count_vector(text, self.featurizer))


def train_naive_bayes(
    texts: Sequence[str],
    labels: Sequence[int],
    featurizer: BowFeaturizer,
    alpha: float = 1.0,
    n_classes: int | None = None,
) -> NaiveBayesModel:
    """Fit class priors and Laplace-smoothed token likelihoods from counts."""
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = _check_classes(labels, n_classes)
    vocab = len(featurizer)
    token_counts = np.zeros((n_classes, vocab))
    for text, label in zip(texts, labels):
        token_counts[label] += count_vector(text, featurizer)
    smoothed = token_counts + alpha
    token_log_prob = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    class_log_prior = np.log(np.bincount(labels, minlength=n_classes) / labels.size)
    return NaiveBayesModel(
        featurizer=featurizer,
        class_log_prior=class_log_prior,
        token_log_prob=token_log_prob,
    )


@dataclass(frozen=True)
class LogRegModel:
    """Multinomial logistic regression over tf-idf features."""

    featurizer: BowFeaturizer
    weights: np.ndarray  # (vocab, n_classes)
    bias: np.ndarray  # (n_classes,)
    loss_trace: tuple[float, ...] = ()

    def predict_features(self, features: np.ndarray) -> int:
        return int(np.argmax(features @ self.weights + self.bias))

    def predict_text(self, text: str) -> int:
        return self.predict_features(featurize(text, self.featurizer))


def train_logreg(
    texts: Sequence[str],
    labels: Sequence[int],
    featurizer: BowFeaturizer,
    epochs: int = 200,
    lr: float = 0.5,
    n_classes: int | None = None,
) -> LogRegModel:
    """Full-batch gradient descent on mean cross-entropy, from zero weights.

    Deterministic: initialization is zero and updates are full-batch, so no
    randomness enters training.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = _check_classes(labels, n_classes)
    if epochs < 0:
        raise ValueError(f"epochs must be >= 0, got {epochs}")
    features = np.stack([featurize(t, featurizer) for t in texts])
    n_samples = features.shape[0]
    onehot = np.eye(n_classes)[labels]

    x = tc.Tensor(features)
    y = tc.Tensor(onehot)
    w = tc.Parameter(np.zeros((len(featurizer), n_classes)), "logreg.w")
    b = tc.Parameter(np.zeros(n_classes), "logreg.b")
    column = tc.Tensor(np.ones((n_classes, 1)))
    row = tc.Tensor(np.ones((1, n_samples)))

    losses = []
    for _ in range(epochs):
        tc.zero_grads([w, b])
        logits = tc.add(tc.matmul(x, w), b)
        probs = tc.softmax_masked(logits, np.ones(n_classes))
        log_likelihood = tc.mul(y, tc.log(tc.clamp_min(probs, 1e-12)))
        loss = tc.scale(tc.matmul(row, tc.matmul(log_likelihood, column)), -1.0 / n_samples)
        if not np.isfinite(loss.data).all():
            raise ValueError("non-finite loss during logistic-regression training")
        loss.backward()
        losses.append(loss.item())
        w.data -= lr * w.grad
        b.data -= lr * b.grad
    return LogRegModel(
        featurizer=featurizer,
        weights=w.data,
        bias=b.data,
        loss_trace=tuple(losses),
    )


def evaluate_baseline(
    model: NaiveBayesModel | LogRegModel,
    texts: Sequence[str],
    labels: Sequence[int],
) -> EvalReport:
    """Report for a fitted baseline, using the shared metrics implementation."""
    y_pred = [model.predict_text(t) for t in texts]
    n_classes = model.class_log_prior.size if isinstance(model, NaiveBayesModel) else model.bias.size
    return classification_report(list(labels), y_pred, n_classes=n_classes)
