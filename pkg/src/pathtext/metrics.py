"""Corpus BLEU with brevity penalty and modified n-gram precision."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import LengthMismatch


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokens with punctuation detached."""
    return re.sub(r"([^\w\s])", r" \1 ", text.lower()).split()


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_length(hyp_len: int, ref_lens: list[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


def _corpus_counts(
    hyps: list[list[str]], refs: list[list[list[str]]], n: int
) -> tuple[int, int]:
    matched = total = 0
    for hyp, hyp_refs in zip(hyps, refs):
        counts = _ngrams(hyp, n)
        if not counts:
            continue
        clipped = Counter()
        for ref in hyp_refs:
            ref_counts = _ngrams(ref, n)
            for gram, c in counts.items():
                clipped[gram] = max(clipped[gram], min(c, ref_counts[gram]))
        matched += sum(clipped.values())
        total += sum(counts.values())
    return matched, total


def bleu_n(hyps: list[str], refs: list[list[str]], n: int) -> float:
    """Corpus-level BLEU-n: geometric mean of modified precisions up to n,
    scaled by the brevity penalty. Any zero precision gives 0.0."""
    if len(hyps) != len(refs) or not hyps:
        raise LengthMismatch(
            f"{len(hyps)} hypotheses vs {len(refs)} reference sets"
        )
    hyp_tokens = [tokenize(h) for h in hyps]
    ref_tokens = [[tokenize(r) for r in rs] for rs in refs]
    for i, rs in enumerate(ref_tokens):
        if not rs:
            raise LengthMismatch(f"hypothesis {i + 1} has no references")

    log_sum = 0.0
    for k in range(1, n + 1):
        matched, total = _corpus_counts(hyp_tokens, ref_tokens, k)
        if matched == 0 or total == 0:
            return 0.0
        log_sum += math.log(matched / total) / n

    c = sum(len(h) for h in hyp_tokens)
    r = sum(
        _closest_ref_length(len(h), [len(x) for x in rs])
        for h, rs in zip(hyp_tokens, ref_tokens)
    )
    if c == 0:
        return 0.0
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


@dataclass
class EvalReport:
    """Corpus BLEU-1/2/3 plus per-hypothesis sentence scores."""

    bleu_1: float
    bleu_2: float
    bleu_3: float
    per_hypothesis: list[dict] = field(default_factory=list)
    num_hypotheses: int = 0
    num_references: int = 0

    def to_record(self) -> dict:
        return {
            "bleu_1": self.bleu_1,
            "bleu_2": self.bleu_2,
            "bleu_3": self.bleu_3,
            "num_hypotheses": self.num_hypotheses,
            "num_references": self.num_references,
        }


def evaluate_bleu(hyps: list[str], refs: list[list[str]]) -> EvalReport:
    per_hyp = []
    for i, (h, rs) in enumerate(zip(hyps, refs)):
        scores = {}
        for n in (1, 2, 3):
            try:
                scores[f"bleu_{n}"] = bleu_n([h], [rs], n)
            except LengthMismatch:
                scores[f"bleu_{n}"] = 0.0
        per_hyp.append({"index": i, **scores})
    return EvalReport(
        bleu_1=bleu_n(hyps, refs, 1),
        bleu_2=bleu_n(hyps, refs, 2),
        bleu_3=bleu_n(hyps, refs, 3),
        per_hypothesis=per_hyp,
        num_hypotheses=len(hyps),
        num_references=sum(len(r) for r in refs),
    )
