from __future__ import annotations

import random

import pytest

from pathtext.errors import LengthMismatch
from pathtext.metrics import bleu_n, evaluate_bleu, tokenize


class TestTokenize:
    def test_lowercase_and_punctuation_detachment(self):
        assert tokenize("The cat sat.") == ["the", "cat", "sat", "."]

    def test_comma(self):
        assert tokenize("a, b") == ["a", ",", "b"]

    def test_empty(self):
        assert tokenize("") == []


class TestBleu:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_identity_is_one(self, n):
        hyps = ["the quick brown fox jumps"]
        assert bleu_n(hyps, [hyps], n) == pytest.approx(1.0, abs=1e-9)

    def test_hand_computed_unigram(self):
        assert bleu_n(["a b c d"], [["a b c e"]], 1) == pytest.approx(0.75, abs=1e-9)

    def test_empty_hypothesis(self):
        assert bleu_n([""], [["a b"]], 1) == 0.0

    def test_zero_overlap(self):
        assert bleu_n(["x y"], [["a b"]], 2) == 0.0

    def test_brevity_penalty(self):
        # hyp 2 tokens vs ref 4 tokens: p1 = 1, BP = exp(1 - 4/2)
        import math

        expected = math.exp(1 - 2.0)
        assert bleu_n(["a b"], [["a b c d"]], 1) == pytest.approx(expected, abs=1e-9)

    def test_clipping(self):
        # "the the the" vs "the cat": clipped unigram count 1 of 3, and the
        # hypothesis is longer than the reference so no brevity penalty
        assert bleu_n(["the the the"], [["the cat"]], 1) == pytest.approx(1 / 3, abs=1e-9)

    def test_multi_reference_takes_max_clip(self):
        score = bleu_n(["a b"], [["a x", "y b"]], 1)
        assert score == pytest.approx(1.0, abs=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            bleu_n(["a"], [["a"], ["b"]], 1)
        with pytest.raises(LengthMismatch):
            bleu_n([], [], 1)

    def test_corpus_level_pooling(self):
        # corpus BLEU pools counts across segments rather than averaging
        hyps = ["a b", "c d"]
        refs = [["a b"], ["c x"]]
        assert bleu_n(hyps, refs, 1) == pytest.approx(0.75, abs=1e-9)


def _random_corpus(rng: random.Random, sentences: int = 6):
    # sentences stay at 4+ tokens; shorter segments drop out of the trigram
    # counts entirely and can break bleu_2 >= bleu_3
    vocab = [f"w{i}" for i in range(40)]
    hyps, refs = [], []
    for _ in range(sentences):
        ref = rng.sample(vocab, rng.randint(5, 10))
        hyp = list(ref)
        # perturb: drop/replace a couple of tokens
        for _ in range(rng.randint(0, 2)):
            i = rng.randrange(len(hyp))
            if rng.random() < 0.5 and len(hyp) > 4:
                hyp.pop(i)
            else:
                hyp[i] = rng.choice(vocab)
        hyps.append(" ".join(hyp))
        refs.append([" ".join(ref)])
    return hyps, refs


def test_order_monotonicity_on_random_corpora():
    rng = random.Random(71)
    for _ in range(30):
        hyps, refs = _random_corpus(rng)
        b1 = bleu_n(hyps, refs, 1)
        b2 = bleu_n(hyps, refs, 2)
        b3 = bleu_n(hyps, refs, 3)
        assert b1 >= b2 - 1e-12 >= b3 - 2e-12


def test_evaluate_bleu_report():
    report = evaluate_bleu(["a b c"], [["a b c"]])
    assert report.bleu_1 == report.bleu_2 == report.bleu_3 == pytest.approx(1.0)
    assert report.num_hypotheses == 1 and report.num_references == 1
    assert report.per_hypothesis[0]["bleu_3"] == pytest.approx(1.0)
    record = report.to_record()
    assert set(record) == {"bleu_1", "bleu_2", "bleu_3", "num_hypotheses", "num_references"}
