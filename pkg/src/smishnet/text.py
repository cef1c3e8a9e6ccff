"""Text pipeline: cleaning, character encoding, and subword tokenization.

The pipeline turns a raw SMS string into fixed-length integer sequences:
a 128-token subword sequence with an attention mask, and a 256-position
character sequence.  Vocabularies are corpus-trained, deterministic build
artifacts.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PAD_TOKEN",
    "UNK_TOKEN",
    "CLS_TOKEN",
    "SEP_TOKEN",
    "MAX_SUBWORD_LEN",
    "MAX_CHAR_LEN",
    "clean_text",
    "CharVocab",
    "build_char_vocab",
    "encode_chars",
    "SubwordVocab",
    "train_subword_vocab",
    "tokenize_subwords",
    "EncodedSample",
    "encode_sample",
    "save_vocab",
    "load_vocab",
]

PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"
CLS_TOKEN = "<CLS>"
SEP_TOKEN = "<SEP>"

MAX_SUBWORD_LEN = 128
MAX_CHAR_LEN = 256

# Characters retained by clean_text: the Bangla block, ASCII letters,
# ASCII digits, and the space; everything else becomes a space.
_KEEP_RE = re.compile(r"[^ঀ-৿a-zA-Z0-9 ]")
_SPACE_RE = re.compile(r"\s+")


def clean_text(raw: str) -> str:
    """Normalize a raw message to the retained character classes.

    Disallowed characters are replaced by spaces (not deleted) so that
    adjacent words never fuse; whitespace runs collapse to a single
    space and the result is trimmed.  Idempotent.
    """
    text = _KEEP_RE.sub(" ", raw)
    return _SPACE_RE.sub(" ", text).strip()


@dataclass(frozen=True)
class CharVocab:
    """Character-to-id mapping with PAD=0 and UNK=1 sentinels."""

    char_to_id: dict[str, int]
    id_to_char: list[str]
    pad_id: int = 0
    unk_id: int = 1

    def __len__(self) -> int:
        return len(self.id_to_char)

    def id_for(self, char: str) -> int:
        return self.char_to_id.get(char, self.unk_id)


def build_char_vocab(corpus: list[str]) -> CharVocab:
    """Enumerate corpus characters in first-occurrence order after the sentinels."""
    if not corpus:
        raise ValueError("cannot build a character vocabulary from an empty corpus")
    id_to_char = [PAD_TOKEN, UNK_TOKEN]
    char_to_id: dict[str, int] = {}
    for text in corpus:
        for ch in text:
            if ch not in char_to_id:
                char_to_id[ch] = len(id_to_char)
                id_to_char.append(ch)
    return CharVocab(char_to_id=char_to_id, id_to_char=id_to_char)


def encode_chars(text: str, vocab: CharVocab, max_len: int = MAX_CHAR_LEN) -> np.ndarray:
    """Encode the first ``min(len(text), max_len)`` characters; pad the rest.

    Position ``i`` holds the id of ``text[i]`` (UNK for unseen characters)
    for ``i < E`` with ``E = min(len(text), max_len)`` and ``pad_id`` for
    ``i >= E``.
    """
    ids = np.full(max_len, vocab.pad_id, dtype=np.int64)
    for i, ch in enumerate(text[:max_len]):
        ids[i] = vocab.id_for(ch)
    return ids


@dataclass(frozen=True)
class SubwordVocab:
    """Greedy pair-merge subword vocabulary with PAD/UNK/CLS/SEP specials."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    max_vocab_size: int
    pad_id: int = 0
    unk_id: int = 1
    cls_id: int = 2
    sep_id: int = 3
    _max_token_len: int = field(init=False, repr=False)

    def __post_init__(self):
        longest = max(
            (len(t) for t in self.id_to_token[self.sep_id + 1 :]),
            default=1,
        )
        object.__setattr__(self, "_max_token_len", longest)

    def __len__(self) -> int:
        return len(self.id_to_token)


_SPECIALS = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN]


def train_subword_vocab(corpus: list[str], target_size: int) -> SubwordVocab:
    """Learn a subword vocabulary by iterative most-frequent pair merging.

    Starting from all single corpus characters, the most frequent adjacent
    symbol pair (ties broken lexicographically) is merged into a new token
    until ``target_size`` tokens exist or no pair occurs at least twice.
    Merges never cross word (space) boundaries.
    """
    if not corpus:
        raise ValueError("cannot train a subword vocabulary on an empty corpus")

    alphabet: list[str] = []
    seen: set[str] = set()
    for text in corpus:
        for ch in text:
            if ch != " " and ch not in seen:
                seen.add(ch)
                alphabet.append(ch)

    min_size = len(alphabet) + len(_SPECIALS)
    if target_size < min_size:
        raise ValueError(
            f"target_size {target_size} is below the minimum {min_size} "
            f"(alphabet {len(alphabet)} + {len(_SPECIALS)} specials)"
        )

    word_counts = Counter(word for text in corpus for word in text.split())
    # Each distinct word is a tuple of current symbols plus its corpus count.
    words: list[tuple[list[str], int]] = [
        (list(word), count) for word, count in sorted(word_counts.items())
    ]

    id_to_token = list(_SPECIALS) + alphabet
    while len(id_to_token) < target_size:
        pair_counts: Counter[tuple[str, str]] = Counter()
        for symbols, count in words:
            for a, b in zip(symbols, symbols[1:]):
                pair_counts[(a, b)] += count
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        if best_count < 2:
            break
        best_pair = min(p for p, c in pair_counts.items() if c == best_count)
        merged = best_pair[0] + best_pair[1]
        id_to_token.append(merged)
        for symbols, _ in words:
            i = 0
            while i < len(symbols) - 1:
                if symbols[i] == best_pair[0] and symbols[i + 1] == best_pair[1]:
                    symbols[i : i + 2] = [merged]
                else:
                    i += 1

    token_to_id = {tok: i for i, tok in enumerate(id_to_token)}
    return SubwordVocab(
        token_to_id=token_to_id,
        id_to_token=id_to_token,
        max_vocab_size=target_size,
    )


def _greedy_word_ids(word: str, vocab: SubwordVocab) -> list[int]:
    ids = []
    i = 0
    while i < len(word):
        for length in range(min(vocab._max_token_len, len(word) - i), 0, -1):
            token_id = vocab.token_to_id.get(word[i : i + length])
            if token_id is not None:
                ids.append(token_id)
                i += length
                break
        else:
            ids.append(vocab.unk_id)
            i += 1
    return ids


def tokenize_subwords(
    text: str,
    vocab: SubwordVocab,
    max_len: int = MAX_SUBWORD_LEN,
) -> tuple[np.ndarray, np.ndarray]:
    """Tokenize into CLS + greedy longest-match subwords + SEP, padded to ``max_len``.

    Returns ``(ids, mask)`` where ``mask`` is 1.0 on real tokens and 0.0 on
    padding.  Long texts are truncated so that SEP is always the last real
    token.
    """
    ids = [vocab.cls_id]
    for word in text.split():
        ids.extend(_greedy_word_ids(word, vocab))
        if len(ids) >= max_len:
            break
    ids = ids[: max_len - 1]
    ids.append(vocab.sep_id)

    out = np.full(max_len, vocab.pad_id, dtype=np.int64)
    out[: len(ids)] = ids
    mask = np.zeros(max_len, dtype=np.float64)
    mask[: len(ids)] = 1.0
    return out, mask


@dataclass(frozen=True)
class EncodedSample:
    """A fully encoded message ready for the model."""

    subword_ids: np.ndarray  # int64[max_subword_len]
    attention_mask: np.ndarray  # float64[max_subword_len], 1-prefix
    char_ids: np.ndarray  # int64[max_char_len]
    label: int  # 0=Normal, 1=Promo, 2=Smish


def encode_sample(
    text: str,
    subword_vocab: SubwordVocab,
    char_vocab: CharVocab,
    label: int = 0,
    max_subword_len: int = MAX_SUBWORD_LEN,
    max_char_len: int = MAX_CHAR_LEN,
) -> EncodedSample:
    """Clean and encode a raw message into an EncodedSample."""
    cleaned = clean_text(text)
    subword_ids, mask = tokenize_subwords(cleaned, subword_vocab, max_len=max_subword_len)
    char_ids = encode_chars(cleaned, char_vocab, max_len=max_char_len)
    return EncodedSample(
        subword_ids=subword_ids,
        attention_mask=mask,
        char_ids=char_ids,
        label=label,
    )


_VOCAB_FORMAT = "smishnet-vocab-v1"


def save_vocab(path, vocab: CharVocab | SubwordVocab) -> None:
    """Persist a vocabulary as line-oriented text: header, then one token per line."""
    if isinstance(vocab, SubwordVocab):
        header = (
            f"{_VOCAB_FORMAT} kind=subword pad={vocab.pad_id} unk={vocab.unk_id} "
            f"cls={vocab.cls_id} sep={vocab.sep_id} target={vocab.max_vocab_size}"
        )
        tokens = vocab.id_to_token
    elif isinstance(vocab, CharVocab):
        header = f"{_VOCAB_FORMAT} kind=char pad={vocab.pad_id} unk={vocab.unk_id}"
        tokens = vocab.id_to_char
    else:
        raise TypeError(f"unsupported vocabulary type {type(vocab).__name__}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for token in tokens:
            fh.write(token + "\n")


def load_vocab(path) -> CharVocab | SubwordVocab:
    """Load a vocabulary written by :func:`save_vocab`."""
    with open(path, encoding="utf-8", newline="\n") as fh:
        header = fh.readline().rstrip("\n")
        tokens = [line.rstrip("\n") for line in fh]
    fields = header.split()
    if not fields or fields[0] != _VOCAB_FORMAT:
        raise ValueError(f"not a vocabulary file (bad header {header!r})")
    meta = dict(part.split("=", 1) for part in fields[1:])
    kind = meta.get("kind")
    if kind == "char":
        char_to_id = {ch: i for i, ch in enumerate(tokens) if i >= 2}
        return CharVocab(char_to_id=char_to_id, id_to_char=tokens)
    if kind == "subword":
        return SubwordVocab(
            token_to_id={tok: i for i, tok in enumerate(tokens)},
            id_to_token=tokens,
            max_vocab_size=int(meta.get("target", len(tokens))),
        )
    raise ValueError(f"unknown vocabulary kind {kind!r}")
