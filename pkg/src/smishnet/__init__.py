"""Hybrid Bangla SMS smishing classifier: training and inference engine.

A self-contained pipeline that detects smishing (SMS phishing) in Bangla
text messages.  A subword transformer encoder captures token-level context,
a character-level CNN captures morphology and digit/URL patterns, and the
two views are fused through additive attention pooling into a three-way
classifier (Normal / Promo / Smish).  All numerics — reverse-mode autodiff,
attention, convolution, AdamW — are implemented locally on NumPy arrays.

Typical use:

    >>> from smishnet import HybridSmishingClassifier
    >>> clf = HybridSmishingClassifier(epochs=3, seed=0)
    >>> clf.fit(texts, labels)
    >>> clf.predict(["apnar bkash account block hobe"])

or from the command line: ``smishnet train --dataset data.csv --out runs``.
"""

from .baselines import (
    BowFeaturizer,
    LogRegModel,
    NaiveBayesModel,
    evaluate_baseline,
    fit_bow_featurizer,
    train_logreg,
    train_naive_bayes,
)
from .checkpoint import (
    Checkpoint,
    CheckpointError,
    ModelKindError,
    NotACheckpointError,
    ShapeMismatchError,
    TruncatedCheckpointError,
    VersionMismatchError,
    baseline_from_checkpoint,
    checkpoint_from_baseline,
    checkpoint_from_hybrid,
    hybrid_from_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .data import DatasetRecord, gen_synthetic, load_dataset, parse_label, save_dataset
from .estimators import (
    BowVectorizer,
    HybridSmishingClassifier,
    LogisticRegressionBaseline,
    NaiveBayesBaseline,
    check_labels,
    check_text_array,
)
from .metrics import LABELS, EvalReport, classification_report, confusion_matrix, format_report
from .model import (
    AttentionRecord,
    HybridModelConfig,
    HybridModelParams,
    export_attention_map,
    forward,
    init_params,
    predict,
    trim_sample,
)
from .text import (
    CharVocab,
    EncodedSample,
    SubwordVocab,
    build_char_vocab,
    clean_text,
    encode_chars,
    encode_sample,
    load_vocab,
    save_vocab,
    tokenize_subwords,
    train_subword_vocab,
)
from .training import (
    EpochTrace,
    OptimizerState,
    TrainConfig,
    adamw_step,
    cross_entropy,
    cross_validate,
    evaluate,
    stratified_kfold,
    stratified_split,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # text
    "CharVocab", "SubwordVocab", "EncodedSample",
    "clean_text", "build_char_vocab", "encode_chars", "train_subword_vocab",
    "tokenize_subwords", "encode_sample", "save_vocab", "load_vocab",
    # model
    "HybridModelConfig", "HybridModelParams", "AttentionRecord",
    "init_params", "forward", "predict", "trim_sample", "export_attention_map",
    # training
    "TrainConfig", "OptimizerState", "EpochTrace",
    "cross_entropy", "adamw_step", "train", "evaluate",
    "stratified_split", "stratified_kfold", "cross_validate",
    # metrics
    "LABELS", "EvalReport", "confusion_matrix", "classification_report", "format_report",
    # baselines
    "BowFeaturizer", "NaiveBayesModel", "LogRegModel",
    "fit_bow_featurizer", "train_naive_bayes", "train_logreg", "evaluate_baseline",
    # data
    "DatasetRecord", "parse_label", "load_dataset", "save_dataset", "gen_synthetic",
    # checkpoints
    "Checkpoint", "CheckpointError", "NotACheckpointError", "VersionMismatchError",
    "TruncatedCheckpointError", "ShapeMismatchError", "ModelKindError",
    "save_checkpoint", "load_checkpoint",
    "checkpoint_from_hybrid", "hybrid_from_checkpoint",
    "checkpoint_from_baseline", "baseline_from_checkpoint",
    # estimators
    "BowVectorizer", "NaiveBayesBaseline", "LogisticRegressionBaseline",
    "HybridSmishingClassifier", "check_text_array", "check_labels",
]
