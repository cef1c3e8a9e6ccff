"""Scikit-learn compatible wrappers around the training pipeline.

Each estimator takes raw message strings, handles cleaning, vocabulary
fitting, and encoding internally, and exposes the familiar
``fit`` / ``predict`` / ``predict_proba`` / ``get_params`` surface so the
models compose with scikit-learn model-selection utilities.  Only the
base-class plumbing comes from scikit-learn; all numerics are local.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import baselines as bl
from .data import parse_label
from .metrics import LABELS
from .model import HybridModelConfig, forward, init_params, predict as model_predict, trim_sample
from .text import build_char_vocab, clean_text, encode_sample, train_subword_vocab
from .training import TrainConfig, train

__all__ = [
    "check_text_array",
    "check_labels",
    "BowVectorizer",
    "NaiveBayesBaseline",
    "LogisticRegressionBaseline",
    "HybridSmishingClassifier",
]


def check_text_array(X) -> list[str]:
    """Validate that X is a non-empty 1-D collection of strings."""
    if isinstance(X, str):
        raise TypeError("X must be a sequence of strings, not a single string")
    texts = list(X)
    if not texts:
        raise ValueError("X must contain at least one text")
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise TypeError(f"X[{i}] is {type(text).__name__}, expected str")
    return texts


def check_labels(y, n_samples: int) -> np.ndarray:
    """Parse labels (ints or names) into class indices and check the length."""
    labels = list(y)
    if len(labels) != n_samples:
        raise ValueError(f"X has {n_samples} samples but y has {len(labels)}")
    parsed = np.empty(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if isinstance(label, str):
            parsed[i] = parse_label(label)
        else:
            value = int(label)
            if value != label or not 0 <= value < len(LABELS):
                raise ValueError(f"y[{i}] = {label!r} is not a valid class")
            parsed[i] = value
    return parsed


def _original_classes(y) -> np.ndarray:
    """Class values in index order, preserving the caller's label style."""
    first = next(iter(y))
    if isinstance(first, str):
        return np.asarray(LABELS, dtype=object)
    return np.arange(len(LABELS))


class BowVectorizer(TransformerMixin, BaseEstimator):
    """Bag-of-words tf-idf features over cleaned, whitespace-split tokens.

    Parameters
    ----------
    min_df : int, default=2
        Keep only tokens appearing in at least this many documents.
    """

    def __init__(self, min_df: int = 2):
        self.min_df = min_df

    def fit(self, X, y=None):
        texts = [clean_text(t) for t in check_text_array(X)]
        self.featurizer_ = bl.fit_bow_featurizer(texts, min_df=self.min_df)
        self.vocabulary_ = dict(self.featurizer_.token_to_index)
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "featurizer_"):
            raise ValueError("BowVectorizer is not fitted; call fit first")
        texts = [clean_text(t) for t in check_text_array(X)]
        return np.stack([bl.featurize(t, self.featurizer_) for t in texts])


class NaiveBayesBaseline(ClassifierMixin, BaseEstimator):
    """Multinomial naive Bayes on raw bag-of-words counts.

    Parameters
    ----------
    alpha : float, default=1.0
        Additive (Laplace) smoothing for token likelihoods.
    min_df : int, default=2
        Minimum document frequency for vocabulary tokens.
    """

    def __init__(self, alpha: float = 1.0, min_df: int = 2):
        self.alpha = alpha
        self.min_df = min_df

    def fit(self, X, y):
        texts = [clean_text(t) for t in check_text_array(X)]
        labels = check_labels(y, len(texts))
        self.classes_ = _original_classes(y)
        featurizer = bl.fit_bow_featurizer(texts, min_df=self.min_df)
        self.model_ = bl.train_naive_bayes(
            texts, labels, featurizer, alpha=self.alpha, n_classes=len(LABELS)
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ValueError(f"{type(self).__name__} is not fitted; call fit first")

    def _log_scores(self, X) -> np.ndarray:
        self._check_fitted()
        texts = [clean_text(t) for t in check_text_array(X)]
        counts = np.stack([bl.count_vector(t, self.model_.featurizer) for t in texts])
        return self.model_.class_log_prior + counts @ self.model_.token_log_prob.T

    def predict_proba(self, X) -> np.ndarray:
        scores = self._log_scores(X)
        shifted = scores - scores.max(axis=1, keepdims=True)
        weights = np.exp(shifted)
        return weights / weights.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        scores = self._log_scores(X)
        return self.classes_[np.argmax(scores, axis=1)]


class LogisticRegressionBaseline(ClassifierMixin, BaseEstimator):
    """Multinomial logistic regression on tf-idf features, full-batch GD.

    Parameters
    ----------
    epochs : int, default=200
        Number of full-batch gradient-descent steps.
    lr : float, default=0.5
        Gradient-descent step size.
    min_df : int, default=2
        Minimum document frequency for vocabulary tokens.
    """

    def __init__(self, epochs: int = 200, lr: float = 0.5, min_df: int = 2):
        self.epochs = epochs
        self.lr = lr
        self.min_df = min_df

    def fit(self, X, y):
        texts = [clean_text(t) for t in check_text_array(X)]
        labels = check_labels(y, len(texts))
        self.classes_ = _original_classes(y)
        featurizer = bl.fit_bow_featurizer(texts, min_df=self.min_df)
        self.model_ = bl.train_logreg(
            texts, labels, featurizer,
            epochs=self.epochs, lr=self.lr, n_classes=len(LABELS),
        )
        self.loss_trace_ = self.model_.loss_trace
        return self

    def _logits(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise ValueError(f"{type(self).__name__} is not fitted; call fit first")
        texts = [clean_text(t) for t in check_text_array(X)]
        features = np.stack([bl.featurize(t, self.model_.featurizer) for t in texts])
        return features @ self.model_.weights + self.model_.bias

    def predict_proba(self, X) -> np.ndarray:
        logits = self._logits(X)
        shifted = logits - logits.max(axis=1, keepdims=True)
        weights = np.exp(shifted)
        return weights / weights.sum(axis=1, keepdims=True)

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self._logits(X), axis=1)]


class HybridSmishingClassifier(ClassifierMixin, BaseEstimator):
    """Subword-transformer + character-CNN classifier with attention fusion.

    ``fit`` builds both vocabularies from the training texts, encodes every
    message, and runs mini-batch AdamW training with an internal stratified
    holdout.  All randomness flows from ``seed``, so fits are reproducible.

    Parameters mirror the architecture and optimizer knobs; the two
    vocabulary sizes are learned from the data (``subword_vocab_size`` caps
    the subword vocabulary).
    """

    def __init__(
        self,
        hidden_dim: int = 128,
        encoder_layers: int = 2,
        attention_heads: int = 4,
        ff_dim: int = 256,
        char_embed_dim: int = 32,
        cnn_filter_widths: tuple[int, ...] = (3, 4, 5),
        cnn_filters_per_width: int = 64,
        fusion_dim: int = 128,
        dropout_rate: float = 0.1,
        max_subword_len: int = 128,
        max_char_len: int = 256,
        subword_vocab_size: int = 500,
        epochs: int = 3,
        batch_size: int = 16,
        learning_rate: float = 2e-5,
        weight_decay: float = 0.01,
        split_fraction: float = 0.8,
        seed: int = 0,
    ):
        self.hidden_dim = hidden_dim
        self.encoder_layers = encoder_layers
        self.attention_heads = attention_heads
        self.ff_dim = ff_dim
        self.char_embed_dim = char_embed_dim
        self.cnn_filter_widths = cnn_filter_widths
        self.cnn_filters_per_width = cnn_filters_per_width
        self.fusion_dim = fusion_dim
        self.dropout_rate = dropout_rate
        self.max_subword_len = max_subword_len
        self.max_char_len = max_char_len
        self.subword_vocab_size = subword_vocab_size
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.split_fraction = split_fraction
        self.seed = seed

    def fit(self, X, y):
        texts = [clean_text(t) for t in check_text_array(X)]
        labels = check_labels(y, len(texts))
        self.classes_ = _original_classes(y)

        self.subword_vocab_ = train_subword_vocab(texts, self.subword_vocab_size)
        self.char_vocab_ = build_char_vocab(texts)
        self.model_config_ = HybridModelConfig(
            vocab_size=len(self.subword_vocab_.id_to_token),
            char_vocab_size=len(self.char_vocab_.id_to_char),
            hidden_dim=self.hidden_dim,
            encoder_layers=self.encoder_layers,
            attention_heads=self.attention_heads,
            ff_dim=self.ff_dim,
            char_embed_dim=self.char_embed_dim,
            cnn_filter_widths=tuple(self.cnn_filter_widths),
            cnn_filters_per_width=self.cnn_filters_per_width,
            fusion_dim=self.fusion_dim,
            dropout_rate=self.dropout_rate,
            max_subword_len=self.max_subword_len,
            max_char_len=self.max_char_len,
        )
        train_config = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            eta=self.learning_rate,
            weight_decay=self.weight_decay,
            split_fraction=self.split_fraction,
        )
        samples = [
            encode_sample(
                text, self.subword_vocab_, self.char_vocab_, label=int(label),
                max_subword_len=self.max_subword_len, max_char_len=self.max_char_len,
            )
            for text, label in zip(texts, labels)
        ]
        params = init_params(self.model_config_, seed=self.seed)
        self.params_, self.trace_ = train(samples, params, self.model_config_, train_config)
        return self

    def _encode(self, X):
        if not hasattr(self, "params_"):
            raise ValueError(f"{type(self).__name__} is not fitted; call fit first")
        texts = [clean_text(t) for t in check_text_array(X)]
        return [
            trim_sample(
                encode_sample(
                    text, self.subword_vocab_, self.char_vocab_,
                    max_subword_len=self.max_subword_len, max_char_len=self.max_char_len,
                )
            )
            for text in texts
        ]

    def predict_proba(self, X) -> np.ndarray:
        rows = []
        for sample in self._encode(X):
            _, probs, _ = forward(sample, self.params_, self.model_config_, train=False)
            rows.append(probs.data)
        return np.stack(rows)

    def predict(self, X) -> np.ndarray:
        indices = [
            model_predict(s, self.params_, self.model_config_) for s in self._encode(X)
        ]
        return self.classes_[np.asarray(indices, dtype=np.int64)]
