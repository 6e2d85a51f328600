from __future__ import annotations

import io
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_table
from pathtext.data import build_table
from pathtext.dsl import Apply, parse_path, serialize_path
from pathtext.errors import EmptyInput
from pathtext.scoring import (
    INPUT_SWAP,
    LABEL_CORRECT,
    LABEL_INCORRECT,
    MODULE_SWAP,
    TRUNCATION,
    EnsembleConfig,
    SaliencyQuery,
    ensemble_score,
    fluency_score,
    generate_saliency_training_data,
    heuristic_saliency,
    read_gold,
    read_samples,
    saliency_score,
    semantic_consistency_score,
    write_samples,
)


class TestFluency:
    def test_all_certain_tokens(self):
        assert fluency_score([0.0, 0.0]) == pytest.approx(1.0, abs=1e-9)

    def test_geometric_mean(self):
        assert fluency_score([math.log(0.5), math.log(0.5)]) == pytest.approx(0.5, abs=1e-9)

    def test_mixed(self):
        assert fluency_score([math.log(0.9), math.log(0.1)]) == pytest.approx(0.3, abs=1e-9)

    def test_empty(self):
        with pytest.raises(EmptyInput):
            fluency_score([])

    @given(st.lists(st.floats(min_value=-20, max_value=0), min_size=1, max_size=30))
    def test_range_and_permutation_invariance(self, logprobs):
        score = fluency_score(logprobs)
        assert 0.0 < score <= 1.0
        shuffled = list(logprobs)
        random.Random(0).shuffle(shuffled)
        assert fluency_score(shuffled) == pytest.approx(score, abs=1e-12)


class _FixedNli:
    def __init__(self, forward: float, backward: float):
        self.forward, self.backward = forward, backward
        self.calls: list = []

    def entail(self, premise, hypothesis):
        self.calls.append((premise, hypothesis))
        return self.forward if len(self.calls) % 2 == 1 else self.backward


class TestConsistency:
    def test_perfect(self):
        assert semantic_consistency_score(["a."], "a.", _FixedNli(1.0, 1.0)) == 1.0

    def test_mean_of_directions(self):
        assert semantic_consistency_score(["a."], "b.", _FixedNli(0.9, 0.7)) == pytest.approx(0.8)

    def test_zero(self):
        assert semantic_consistency_score(["a."], "b.", _FixedNli(0.0, 0.0)) == 0.0

    def test_premise_is_concatenation(self):
        nli = _FixedNli(1.0, 1.0)
        semantic_consistency_score(["First.", "Second."], "x", nli)
        assert nli.calls[0] == ("First. Second.", "x")


class TestEnsemble:
    def test_endpoint(self):
        assert ensemble_score(1.0, 1.0) == pytest.approx(1.0, abs=1e-9)

    def test_hand_case(self):
        assert ensemble_score(0.5, 0.8, EnsembleConfig(alpha=0.05)) == pytest.approx(0.785, abs=1e-9)

    def test_degenerate_alpha(self):
        assert ensemble_score(0.9, 0.3, EnsembleConfig(alpha=0.0)) == pytest.approx(0.3, abs=1e-9)

    def test_default_alpha(self):
        assert EnsembleConfig().alpha == 0.05

    def test_alpha_bounds(self):
        with pytest.raises(ValueError):
            EnsembleConfig(alpha=1.5)

    @given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
    def test_range_and_monotonicity(self, a, b):
        s = ensemble_score(a, b)
        assert 0.0 <= s <= 1.0
        assert ensemble_score(min(a + 0.1, 1.0), b) >= s - 1e-12

    @given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
    def test_identity_on_equal_scores(self, x, alpha):
        assert ensemble_score(x, x, EnsembleConfig(alpha=alpha)) == pytest.approx(x, abs=1e-9)


class TestSaliency:
    def test_narrowing_filter_beats_full_table_filter(self, reg):
        t = build_table(
            "", ["team", "points"], [["red", "3"], ["red", "5"], ["blue", "9"]]
        )
        full = parse_path("count { filter_eq { all_rows ; points ; 3 } }")
        narrowing = heuristic_saliency(
            SaliencyQuery(t, parse_path("count { filter_eq { all_rows ; team ; blue } }")), reg
        )
        degenerate = heuristic_saliency(
            SaliencyQuery(t, parse_path("count { filter_eq { all_rows ; team ; red } }")), reg
        )
        assert narrowing > degenerate
        assert 0.0 <= degenerate <= narrowing <= 1.0
        assert heuristic_saliency(SaliencyQuery(t, full), reg) <= 1.0

    def test_deterministic(self, reg, t1938):
        q = SaliencyQuery(t1938, parse_path("avg { all_rows ; money }"))
        assert heuristic_saliency(q, reg) == heuristic_saliency(q, reg)

    def test_no_filter_baseline(self, reg, t1938):
        q = SaliencyQuery(t1938, parse_path("count { all_rows }"))
        score = heuristic_saliency(q, reg)
        # narrowing 0.25, no columns touched, depth 1
        assert score == pytest.approx(0.5 * 0.25 + 0.0 + 0.2 * (1 / 3), abs=1e-9)

    def test_remote_passthrough(self, t1938):
        class StubClient:
            def score(self, table_linearized, path):
                assert "ralph guldahl" in table_linearized
                return 0.76

        q = SaliencyQuery(t1938, parse_path("count { all_rows }"))
        assert saliency_score(q, backend="remote", client=StubClient()) == 0.76

    def test_bounded_on_random_queries(self, reg):
        rng = random.Random(43)
        for _ in range(20):
            t = random_table(rng)
            q = SaliencyQuery(t, parse_path("sum { filter_all { all_rows ; alpha } ; alpha }"))
            assert 0.0 <= heuristic_saliency(q, reg) <= 1.0


GOLD_TABLE_ROWS = [
    ["red", "3", "10"],
    ["blue", "5", "8"],
    ["gold", "9", "6"],
]


@pytest.fixture()
def gold_table():
    return build_table("teams", ["team", "points", "wins"], GOLD_TABLE_ROWS)


class TestTrainingData:
    def test_truncation_prefixes(self, reg, gold_table):
        gold = [(gold_table, parse_path("eq { hop { argmin { all_rows ; points } ; team } ; red }"))]
        samples = generate_saliency_training_data(gold, reg)
        correct = [s for s in samples if s.label == LABEL_CORRECT]
        assert [serialize_path(s.path) for s in correct] == [
            "argmin { all_rows ; points }",
            "hop { argmin { all_rows ; points } ; team }",
            "eq { hop { argmin { all_rows ; points } ; team } ; red }",
        ]
        assert all(s.provenance == TRUNCATION for s in correct)

    def test_module_swap(self, reg, gold_table):
        gold = [(gold_table, parse_path("argmin { all_rows ; points }"))]
        samples = generate_saliency_training_data(gold, reg)
        swaps = [s for s in samples if s.provenance == MODULE_SWAP]
        assert [serialize_path(s.path) for s in swaps] == ["arg_max { all_rows ; points }"]
        assert all(s.label == LABEL_INCORRECT for s in swaps)

    def test_input_swap(self, reg, gold_table):
        gold = [(gold_table, parse_path("avg { all_rows ; points }"))]
        samples = generate_saliency_training_data(gold, reg)
        input_swaps = {serialize_path(s.path) for s in samples if s.provenance == INPUT_SWAP}
        assert input_swaps == {"avg { all_rows ; wins }"}

    def test_incorrect_differs_by_single_edit(self, reg, gold_table):
        gold = [(gold_table, parse_path("most_greater_eq { all_rows ; points ; 5 }"))]
        samples = generate_saliency_training_data(gold, reg)
        gold_node = gold[0][1]
        for s in samples:
            if s.label == LABEL_CORRECT:
                continue
            assert isinstance(s.path, Apply)
            edits = (s.path.module != gold_node.module) + sum(
                serialize_path(a) != serialize_path(b)
                for a, b in zip(s.path.args, gold_node.args)
            )
            assert edits == 1

    def test_swaps_never_reproduce_correct_samples(self, reg, gold_table):
        gold = [(gold_table, parse_path("avg { all_rows ; points }"))]
        samples = generate_saliency_training_data(gold, reg)
        correct = {serialize_path(s.path) for s in samples if s.label == LABEL_CORRECT}
        incorrect = {serialize_path(s.path) for s in samples if s.label == LABEL_INCORRECT}
        assert not (correct & incorrect)

    def test_invalid_gold_skipped(self, reg, gold_table, caplog):
        import logging

        gold = [
            (gold_table, parse_path("avg { all_rows ; missing }")),
            (gold_table, parse_path("count { all_rows }")),
        ]
        with caplog.at_level(logging.WARNING, logger="pathtext.scoring"):
            samples = generate_saliency_training_data(gold, reg)
        assert "skipping gold path" in caplog.text
        assert {serialize_path(s.path) for s in samples if s.label == LABEL_CORRECT} == {
            "count { all_rows }"
        }

    def test_correct_count_equals_total_depth(self, reg, gold_table):
        paths = [
            "count { all_rows }",
            "avg { all_rows ; points }",
            "hop { argmax { all_rows ; wins } ; team }",
            "eq { hop { argmin { all_rows ; points } ; team } ; red }",
        ]
        gold = [(gold_table, parse_path(p)) for p in paths]
        samples = generate_saliency_training_data(gold, reg)
        correct = [s for s in samples if s.label == LABEL_CORRECT]
        assert len(correct) == 1 + 1 + 2 + 3

    def test_file_round_trip(self, reg, gold_table):
        gold = [(gold_table, parse_path("most_eq { all_rows ; team ; red }"))]
        samples = generate_saliency_training_data(gold, reg)
        buf = io.StringIO()
        assert write_samples(samples, buf) == len(samples)
        buf.seek(0)
        again = read_samples(buf)
        assert [
            (serialize_path(s.path), s.label, s.provenance) for s in again
        ] == [(serialize_path(s.path), s.label, s.provenance) for s in samples]
        assert again[0].table.header == gold_table.header


def test_read_gold_round_trip(gold_table):
    import json

    from pathtext.data import table_to_json

    line = json.dumps({"table": table_to_json(gold_table), "path": "count { all_rows }"})
    gold = read_gold(io.StringIO(line + "\n"))
    assert len(gold) == 1
    assert gold[0][0].header == gold_table.header
    assert serialize_path(gold[0][1]) == "count { all_rows }"
