"""Tests for text cleaning, character encoding, and subword tokenization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smishnet import text as tx


class TestCleanText:
    def test_empty(self):
        assert tx.clean_text("") == ""

    def test_bangla_punctuation_stripped(self):
        assert tx.clean_text("বাংলা   টাকা!!") == "বাংলা টাকা"

    def test_url_fragments_become_words(self):
        assert tx.clean_text("Click: http://x.co টাকা") == "Click http x co টাকা"

    def test_keeps_ascii_digits_and_letters(self):
        assert tx.clean_text("Win 5000tk NOW!!!") == "Win 5000tk NOW"

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_idempotent(self, s):
        once = tx.clean_text(s)
        assert tx.clean_text(once) == once

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_output_alphabet(self, s):
        out = tx.clean_text(s)
        for ch in out:
            assert (
                "ঀ" <= ch <= "৿" or ch.isascii() and (ch.isalnum() or ch == " ")
            ), repr(ch)
        assert "  " not in out
        assert out == out.strip()


class TestCharVocab:
    def test_first_occurrence_order(self):
        vocab = tx.build_char_vocab(["ab"])
        assert vocab.char_to_id == {"a": 2, "b": 3}
        assert vocab.pad_id == 0 and vocab.unk_id == 1

    def test_deduplication(self):
        assert len(tx.build_char_vocab(["aa"])) == 3

    def test_deterministic(self):
        corpus = ["abc", "টাকা ab"]
        v1 = tx.build_char_vocab(corpus)
        v2 = tx.build_char_vocab(corpus)
        assert v1.id_to_char == v2.id_to_char

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            tx.build_char_vocab([])


def encode_chars_reference(text, vocab, max_len):
    """Independent restatement of the character encoding rule."""
    e = min(len(text), max_len)
    out = []
    for i in range(max_len):
        if i < e:
            out.append(vocab.char_to_id.get(text[i], vocab.unk_id))
        else:
            out.append(vocab.pad_id)
    return out


class TestEncodeChars:
    def test_pad_tail(self):
        vocab = tx.build_char_vocab(["abc"])
        got = tx.encode_chars("abc", vocab, max_len=5)
        assert got.tolist() == [2, 3, 4, 0, 0]

    def test_empty_is_all_pad(self):
        vocab = tx.build_char_vocab(["abc"])
        assert tx.encode_chars("", vocab).tolist() == [0] * 256

    def test_truncation_keeps_head(self):
        vocab = tx.build_char_vocab(["ab"])
        got = tx.encode_chars("ab" * 150, vocab)
        assert got.shape == (256,)
        assert not np.any(got == vocab.pad_id)
        assert got.tolist() == [2, 3] * 128

    def test_unknown_char_maps_to_unk(self):
        vocab = tx.build_char_vocab(["ab"])
        assert tx.encode_chars("axb", vocab, max_len=4).tolist() == [2, 1, 3, 0]

    def test_matches_reference_on_random_strings(self):
        rng = np.random.default_rng(0)
        pool = list("abcdefghij0123456789 টাকাবাংল")
        vocab = tx.build_char_vocab(["".join(pool[:15])])
        for _ in range(200):
            n = int(rng.integers(0, 600))
            s = "".join(rng.choice(pool, size=n))
            got = tx.encode_chars(s, vocab).tolist()
            assert got == encode_chars_reference(s, vocab, 256)


class TestSubwordVocab:
    def test_frequent_pair_merged(self):
        vocab = tx.train_subword_vocab(["abab", "abab"], target_size=10)
        assert "ab" in vocab.token_to_id

    def test_no_merge_degenerate(self):
        vocab = tx.train_subword_vocab(["abc"], target_size=7)
        assert vocab.id_to_token == ["<PAD>", "<UNK>", "<CLS>", "<SEP>", "a", "b", "c"]

    def test_deterministic(self):
        corpus = ["banana bandana", "ban ban banana"]
        v1 = tx.train_subword_vocab(corpus, target_size=20)
        v2 = tx.train_subword_vocab(corpus, target_size=20)
        assert v1.id_to_token == v2.id_to_token

    def test_tie_broken_lexicographically(self):
        # "xy" and "ab" both occur twice; "ab" < "xy" merges first.
        vocab = tx.train_subword_vocab(["xy ab xy ab"], target_size=9)
        assert vocab.id_to_token[-1] in {"ab", "xy"}
        first_merge = vocab.id_to_token[8]
        assert first_merge == "ab"

    def test_target_too_small_rejected(self):
        with pytest.raises(ValueError, match="minimum"):
            tx.train_subword_vocab(["abc"], target_size=6)

    def test_merges_never_cross_spaces(self):
        vocab = tx.train_subword_vocab(["a b a b a b"], target_size=20)
        for token in vocab.id_to_token[4:]:
            assert " " not in token

    def test_stops_when_no_pair_repeats(self):
        vocab = tx.train_subword_vocab(["abc"], target_size=50)
        assert len(vocab) == 7  # 4 specials + a, b, c; nothing occurs twice


class TestTokenizeSubwords:
    @pytest.fixture()
    def vocab(self):
        return tx.train_subword_vocab(["abab cd", "abab cd ef"], target_size=16)

    def test_empty_text(self, vocab):
        ids, mask = tx.tokenize_subwords("", vocab)
        assert ids[0] == vocab.cls_id and ids[1] == vocab.sep_id
        assert mask.sum() == 2
        assert np.all(ids[2:] == vocab.pad_id)

    def test_five_tokens_mask_seven(self):
        vocab = tx.train_subword_vocab(["a b c d e"], target_size=9)
        ids, mask = tx.tokenize_subwords("a b c d e", vocab)
        assert mask.sum() == 7

    def test_long_text_truncated_with_sep_last(self, vocab):
        ids, mask = tx.tokenize_subwords("ab " * 500, vocab)
        assert mask.sum() == 128
        assert ids[127] == vocab.sep_id

    def test_mask_is_one_prefix(self, vocab):
        rng = np.random.default_rng(1)
        words = ["abab", "cd", "ef", "abcdef", "xyz"]
        for _ in range(100):
            textspec = " ".join(rng.choice(words, size=rng.integers(0, 40)))
            ids, mask = tx.tokenize_subwords(textspec, vocab)
            n = int(mask.sum())
            assert 2 <= n <= 128
            assert np.all(mask[:n] == 1.0) and np.all(mask[n:] == 0.0)
            assert np.all((ids[:n] != vocab.pad_id))
            assert np.all(ids[n:] == vocab.pad_id)

    def test_unknown_chars_map_to_unk(self, vocab):
        ids, mask = tx.tokenize_subwords("qq", vocab)
        assert ids[1] == vocab.unk_id

    def test_roundtrip_reconstructs_nonspace_characters(self):
        corpus = ["banana bandana cab", "ban cab banana", "টাকা অফার টাকা"]
        vocab = tx.train_subword_vocab(corpus, target_size=40)
        for text in corpus + ["banana টাকা cab"]:
            ids, mask = tx.tokenize_subwords(text, vocab)
            n = int(mask.sum())
            specials = {vocab.pad_id, vocab.unk_id, vocab.cls_id, vocab.sep_id}
            decoded = "".join(vocab.id_to_token[i] for i in ids[:n] if i not in specials)
            assert decoded == text.replace(" ", "")


class TestEncodeSample:
    def test_fields_and_shapes(self):
        corpus = ["free টাকা offer", "hello world"]
        cleaned = [tx.clean_text(c) for c in corpus]
        sv = tx.train_subword_vocab(cleaned, target_size=40)
        cv = tx.build_char_vocab(cleaned)
        sample = tx.encode_sample("free টাকা!!", sv, cv, label=1)
        assert sample.subword_ids.shape == (128,)
        assert sample.attention_mask.shape == (128,)
        assert sample.char_ids.shape == (256,)
        assert sample.label == 1


class TestVocabFiles:
    def test_char_vocab_roundtrip(self, tmp_path):
        vocab = tx.build_char_vocab(["ab cd টাকা"])
        path = tmp_path / "chars.txt"
        tx.save_vocab(path, vocab)
        loaded = tx.load_vocab(path)
        assert isinstance(loaded, tx.CharVocab)
        assert loaded.id_to_char == vocab.id_to_char
        assert loaded.char_to_id == vocab.char_to_id

    def test_subword_vocab_roundtrip(self, tmp_path):
        vocab = tx.train_subword_vocab(["abab abab cd"], target_size=12)
        path = tmp_path / "subwords.txt"
        tx.save_vocab(path, vocab)
        loaded = tx.load_vocab(path)
        assert isinstance(loaded, tx.SubwordVocab)
        assert loaded.id_to_token == vocab.id_to_token
        assert loaded.max_vocab_size == vocab.max_vocab_size

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not a vocab\n<PAD>\n", encoding="utf-8")
        with pytest.raises(ValueError, match="header"):
            tx.load_vocab(path)
