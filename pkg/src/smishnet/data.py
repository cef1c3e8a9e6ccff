"""Dataset records, CSV ingestion, and the synthetic corpus generator."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .metrics import LABELS

__all__ = [
    "DatasetRecord",
    "parse_label",
    "load_dataset",
    "save_dataset",
    "gen_synthetic",
]

_LABEL_ALIASES = {
    "normal": 0,
    "promo": 1,
    "promotional": 1,
    "smish": 2,
}


def parse_label(raw: str) -> int:
    """Case-insensitive label parsing; 'Promotional' is an alias of 'Promo'."""
    key = raw.strip().lower()
    if key not in _LABEL_ALIASES:
        allowed = ", ".join(sorted(set(_LABEL_ALIASES)))
        raise ValueError(f"unknown label {raw!r} (expected one of: {allowed})")
    return _LABEL_ALIASES[key]


@dataclass(frozen=True)
class DatasetRecord:
    """One labeled message; label is an index into metrics.LABELS."""

    label: int
    text: str


def load_dataset(path) -> tuple[list[DatasetRecord], dict[str, int]]:
    """Read a `label,text` CSV (any column order, UTF-8, standard quoting).

    Returns the records plus per-class counts.  Errors carry the line
    number for bad labels and the byte offset for malformed quoting or
    encoding problems.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        decoded = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValueError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from None
    if not decoded.strip():
        raise ValueError(f"{path}: empty dataset file")

    # Byte offset of the start of each physical line, for quoting errors.
    line_offsets = [0]
    for line in raw.splitlines(keepends=True):
        line_offsets.append(line_offsets[-1] + len(line))

    reader = csv.reader(io.StringIO(decoded, newline=""), strict=True)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError(f"{path}: empty dataset file") from None
    columns = {name.strip().lower(): i for i, name in enumerate(header)}
    if "label" not in columns or "text" not in columns:
        raise ValueError(f"{path}: header must contain 'label' and 'text' columns, got {header}")
    label_col, text_col = columns["label"], columns["text"]

    records = []
    counts = dict.fromkeys(LABELS, 0)
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            line = min(reader.line_num, len(line_offsets) - 1)
            offset = line_offsets[line - 1]
            raise ValueError(
                f"{path}: malformed quoting near byte offset {offset} "
                f"(line {line}): {exc}"
            ) from None
        if not row:
            continue
        if len(row) <= max(label_col, text_col):
            raise ValueError(
                f"{path}: line {reader.line_num}: expected at least "
                f"{max(label_col, text_col) + 1} columns, got {len(row)}"
            )
        try:
            label = parse_label(row[label_col])
        except ValueError as exc:
            raise ValueError(f"{path}: line {reader.line_num}: {exc}") from None
        records.append(DatasetRecord(label=label, text=row[text_col]))
        counts[LABELS[label]] += 1

    if not records:
        raise ValueError(f"{path}: no data rows after the header")
    return records, counts


def save_dataset(path, records: Sequence[DatasetRecord]) -> None:
    """Write records as a `label,text` CSV with standard quoting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "text"])
        for record in records:
            writer.writerow([LABELS[record.label], record.text])


# --- Synthetic corpus -------------------------------------------------------
#
# Three keyword pools with class-distinctive vocabulary plus shared filler.
# A slice of the smishing class carries no lure keywords at all and is
# recognizable only by character-level patterns (long digit runs and mixed
# letter-digit blobs), which bag-of-words models cannot represent: those
# strings are unique per message and fall below any document-frequency
# threshold.

NORMAL_WORDS = [
    "ami", "tumi", "kemon", "acho", "bhalo", "achi", "bari", "asbo", "kal",
    "dekha", "hobe", "raat", "khabar", "kheyechi", "ma", "baba", "bondhu",
    "adda", "porikkha", "class", "boi", "porbo", "ghum", "brishti",
    "আমি", "তুমি", "কেমন", "আছো", "ভালো", "বাসায়", "আসবো", "কাল", "দেখা",
    "হবে", "রাতে", "খাবার", "মা", "বাবা", "বন্ধু", "আড্ডা", "ক্লাস", "বই",
    "ঘুম", "বৃষ্টি",
]

PROMO_WORDS = [
    "offer", "free", "bonus", "discount", "cashback", "recharge", "internet",
    "pack", "mb", "gb", "minute", "taka", "sale", "mega", "deal", "dial",
    "activate", "sms", "kinun", "paben",
    "অফার", "ফ্রি", "ছাড়", "টাকা", "রিচার্জ", "মেগা", "ডিল", "ইন্টারনেট",
    "বোনাস", "প্যাক", "মিনিট", "কিনুন", "পাবেন",
]

SMISH_WORDS = [
    "urgent", "account", "verify", "password", "blocked", "bank", "atm",
    "card", "pin", "prize", "lottery", "winner", "click", "link", "confirm",
    "suspended", "otp",
    "জরুরি", "একাউন্ট", "যাচাই", "পাসওয়ার্ড", "ব্যাংক", "কার্ড", "পিন",
    "পুরস্কার", "লটারি", "বিজয়ী", "লিংক", "নিশ্চিত",
]

FILLER_WORDS = [
    "apnar", "apni", "aj", "ekhon", "khub", "onek", "notun", "din", "somoy",
    "jonno", "ei", "ta",
    "আপনার", "আপনি", "আজ", "এখন", "খুব", "অনেক", "নতুন", "দিন", "সময়", "জন্য",
]

_PUNCT = ["!", "!!", "?", ".", ":", ",", "..."]
_MIN_TOKENS, _MAX_TOKENS = 4, 20


def _digit_run(rng: np.random.Generator) -> str:
    """Phone-number-like string: 11 digits, unique per message in practice."""
    return "01" + "".join(str(d) for d in rng.integers(0, 10, size=9))


def _alnum_blob(rng: np.random.Generator) -> str:
    """Mixed letter-digit gibberish, the shape of obfuscated codes and links."""
    length = int(rng.integers(8, 13))
    letters = list("abcdefghjkmnpqrstuvwxyz")
    chars = [str(rng.choice(letters)) if i % 2 == 0 else str(rng.integers(0, 10))
             for i in range(length)]
    return "".join(chars)


def _pick_words(rng, pools, weights, n):
    pool_ids = rng.choice(len(pools), size=n, p=weights)
    return [str(rng.choice(pools[i])) for i in pool_ids]


def _decorate(rng, words):
    decorated = []
    for word in words:
        if rng.random() < 0.10:
            word = word.upper()
        if rng.random() < 0.25:
            word = word + str(rng.choice(_PUNCT))
        decorated.append(word)
    return decorated


def _normal_message(rng) -> str:
    n = int(rng.integers(_MIN_TOKENS, _MAX_TOKENS + 1))
    words = _pick_words(rng, [NORMAL_WORDS, FILLER_WORDS], [0.7, 0.3], n)
    if rng.random() < 0.2:
        words[int(rng.integers(len(words)))] = str(rng.integers(1, 31))
    return " ".join(_decorate(rng, words))


def _promo_message(rng) -> str:
    n = int(rng.integers(_MIN_TOKENS, _MAX_TOKENS + 1))
    words = _pick_words(rng, [PROMO_WORDS, FILLER_WORDS], [0.7, 0.3], n)
    for _ in range(int(rng.integers(1, 4))):
        position = int(rng.integers(len(words)))
        words[position] = str(rng.integers(1, 1000))  # prices stay short
    return " ".join(_decorate(rng, words))


def _smish_message(rng) -> str:
    n = int(rng.integers(_MIN_TOKENS, _MAX_TOKENS + 1))
    if rng.random() < 0.25:
        # Keyword-free variant: lexically looks like normal chat; only the
        # character patterns give it away.
        markers = [_digit_run(rng)] + [_alnum_blob(rng) for _ in range(int(rng.integers(1, 3)))]
        words = _pick_words(rng, [NORMAL_WORDS, FILLER_WORDS], [0.5, 0.5], max(n - len(markers), 2))
    else:
        markers = []
        if rng.random() < 0.6:
            markers.append(_digit_run(rng))
        if rng.random() < 0.3:
            markers.append(_alnum_blob(rng))
        words = _pick_words(rng, [SMISH_WORDS, FILLER_WORDS], [0.7, 0.3], max(n - len(markers), 2))
    for marker in markers:
        words.insert(int(rng.integers(len(words) + 1)), marker)
    return " ".join(_decorate(rng, words))


def gen_synthetic(
    n_normal: int = 600,
    n_promo: int = 300,
    n_smish: int = 600,
    seed: int = 0,
) -> list[DatasetRecord]:
    """Generate a labeled corpus with exactly the requested class counts."""
    for name, n in (("n_normal", n_normal), ("n_promo", n_promo), ("n_smish", n_smish)):
        if n < 0:
            raise ValueError(f"{name} must be non-negative, got {n}")
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n_normal):
        records.append(DatasetRecord(label=0, text=_normal_message(rng)))
    for _ in range(n_promo):
        records.append(DatasetRecord(label=1, text=_promo_message(rng)))
    for _ in range(n_smish):
        records.append(DatasetRecord(label=2, text=_smish_message(rng)))
    return records
