from __future__ import annotations

from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathtext.data import (
    NUMERIC,
    TEXTUAL,
    Triple,
    build_table,
    infer_column_types,
    linearize_table,
    normalize_numeric_cell,
    parse_graph,
    parse_table,
    render_number,
    serialize_graph,
    table_to_json,
)
from pathtext.errors import MalformedInput


class TestNormalizeNumericCell:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("74 + 70 + 71 + 69 = 284", Decimal(284)),
            ("+ 12", Decimal(12)),
            ("e", None),
            ("1000", Decimal(1000)),
            ("1,234", Decimal(1234)),
            ("$500", Decimal(500)),
            ("50%", Decimal(50)),
            ("-3.5", Decimal("-3.5")),
            ("", None),
            ("   ", None),
            ("n/a", None),
            ("x = ", None),
            ("inf", None),
            ("nan", None),
        ],
    )
    def test_cases(self, raw, expected):
        assert normalize_numeric_cell(raw) == expected

    @given(st.text(max_size=40))
    def test_total(self, raw):
        normalize_numeric_cell(raw)  # never raises

    @given(st.decimals(allow_nan=False, allow_infinity=False, places=4))
    def test_idempotent_on_rendering(self, value):
        assert normalize_numeric_cell(render_number(value)) == value


@pytest.mark.parametrize(
    "value,expected",
    [
        (Decimal(1000), "1000"),
        (Decimal("12.50"), "12.5"),
        (Decimal(0), "0"),
        (Decimal("-3.20"), "-3.2"),
        (Decimal(284), "284"),
        (Decimal("0.125"), "0.125"),
    ],
)
def test_render_number(value, expected):
    assert render_number(value) == expected


class TestParseTable:
    def test_json_1938(self, t1938):
        assert len(t1938.header) == 6
        assert len(t1938.rows) == 2
        assert t1938.column_types[t1938.column_index("money")] == NUMERIC
        assert t1938.column_types[t1938.column_index("score")] == NUMERIC
        # "e" (even par) is not special-cased, so the mixed column is textual
        # but still usable by the numeric-comparison booleans.
        assert t1938.column_types[t1938.column_index("to par")] == TEXTUAL
        assert t1938.has_numbers(t1938.column_index("to par"))
        assert t1938.rows[0][t1938.column_index("score")] == Decimal(284)

    def test_csv_header_only(self):
        t = parse_table("a,b\n", "csv")
        assert t.header == ("a", "b")
        assert t.rows == ()
        assert t.column_types == (TEXTUAL, TEXTUAL)

    def test_csv_arity_violation(self):
        with pytest.raises(MalformedInput, match="row 2"):
            parse_table("a,b\n1,2\n3", "csv")

    def test_tsv(self):
        t = parse_table("a\tb\n1\tx\n", "tsv")
        assert t.column_types == (NUMERIC, TEXTUAL)

    def test_duplicate_header(self):
        with pytest.raises(MalformedInput, match="duplicate"):
            parse_table('{"header": ["A", "a"], "rows": []}', "json")

    def test_empty_header(self):
        with pytest.raises(MalformedInput, match="empty header"):
            parse_table('{"header": [], "rows": []}', "json")

    def test_cells_trimmed(self):
        t = parse_table('{"header": ["a"], "rows": [["  x  "]]}', "json")
        assert t.rows[0][0] == "x"

    def test_json_round_trip(self, t1938_full):
        again = parse_table(__import__("json").dumps(table_to_json(t1938_full)), "json")
        assert again.header == t1938_full.header
        assert again.column_types == t1938_full.column_types
        assert len(again.rows) == len(t1938_full.rows)


class TestInferColumnTypes:
    def test_numeric_column(self):
        t = build_table("", ["money"], [["1000"], ["106"]])
        assert infer_column_types(t) == (NUMERIC,)

    def test_mixed_column_is_textual(self):
        t = build_table("", ["to par"], [["e"], ["+ 12"]])
        assert infer_column_types(t) == (TEXTUAL,)

    def test_empty_column_defaults_textual(self):
        t = build_table("", ["a", "b"], [])
        assert infer_column_types(t) == (TEXTUAL, TEXTUAL)

    def test_all_empty_cells_textual(self):
        t = build_table("", ["a"], [[""], [""]])
        assert infer_column_types(t) == (TEXTUAL,)

    def test_idempotent_on_parsed(self, t1938_full):
        assert infer_column_types(t1938_full) == t1938_full.column_types


class TestGraph:
    def test_single_triple(self):
        g = parse_graph("A.S._Gubbio_1910 | league | Serie_D")
        assert g.triples == frozenset({Triple("A.S._Gubbio_1910", "league", "Serie_D")})

    def test_dedup(self):
        assert len(parse_graph("a | b | c # a | b | c")) == 1

    def test_arity_violation(self):
        with pytest.raises(MalformedInput, match="expected 3 fields"):
            parse_graph("a | b")

    def test_empty_field(self):
        with pytest.raises(MalformedInput, match="empty field"):
            parse_graph("a |  | c")

    def test_round_trip_identity(self):
        g = parse_graph("b | r | c # a | x | y # a | b | c")
        assert parse_graph(serialize_graph(g)) == g

    def test_order_invariance(self):
        assert parse_graph("a | b | c # d | e | f") == parse_graph("d | e | f # a | b | c")


def test_linearize_table(t1938):
    line = linearize_table(t1938)
    assert line.startswith("place # player # country # score # to par # money | ")
    assert "1 # ralph guldahl # united states # 284 # e # 1000" in line
