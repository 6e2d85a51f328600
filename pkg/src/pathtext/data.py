"""Canonical in-memory values for semi-structured inputs.

Tables arrive as JSON records, CSV, or TSV; graphs arrive as pipe/hash
delimited triple lists. Parsing trims cells, infers per-column types, and
produces immutable values that every downstream operation treats with set
semantics (row order and triple order carry no meaning).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import lru_cache

from .errors import MalformedInput, UnknownColumn

NUMERIC = "numeric"
TEXTUAL = "textual"

# A cell is either a finite decimal number or trimmed text ("" = empty cell).
CellValue = Decimal | str

_CURRENCY = "$€£¥"


def fold(s: str) -> str:
    """Comparison key used for all string equality in the engine."""
    return s.strip().casefold()


def _parse_decimal(raw: str) -> Decimal | None:
    s = raw.strip()
    if s.startswith("+"):
        s = s[1:].strip()
    s = s.replace(",", "")
    s = s.strip(_CURRENCY).strip()
    if s.endswith("%"):
        s = s[:-1].strip()
    if not s:
        return None
    try:
        value = Decimal(s)
    except InvalidOperation:
        return None
    if not value.is_finite():
        return None
    return value


@lru_cache(maxsize=8192)
def normalize_numeric_cell(raw: str) -> Decimal | None:
    """Interpret a cell string as a number, or return None.

    Tried in order: direct decimal parse (after stripping thousands
    separators, one leading '+', currency symbols, and '%'), then the
    substring after the last '=' for arithmetic-expression cells like
    "74 + 70 + 71 + 69 = 284". Total and deterministic.
    """
    s = raw.strip()
    if not s:
        return None
    direct = _parse_decimal(s)
    if direct is not None:
        return direct
    if "=" in s:
        return _parse_decimal(s.rsplit("=", 1)[1])
    return None


@lru_cache(maxsize=8192)
def render_number(value: Decimal) -> str:
    """Canonical shortest decimal rendering: no exponent, no trailing zeros,
    and exact (never rounds through the decimal context)."""
    if value == 0:
        return "0"
    s = format(value, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


def render_cell(cell: CellValue) -> str:
    if isinstance(cell, Decimal):
        return render_number(cell)
    return cell


def cell_number(cell: CellValue) -> Decimal | None:
    """Numeric view of a cell: Decimal cells directly, text via normalization."""
    if isinstance(cell, Decimal):
        return cell
    return normalize_numeric_cell(cell)


@dataclass(frozen=True)
class Table:
    """A topic, an ordered header, and rows of typed cells.

    Rows are stored in file order but carry no semantics: every operation
    over a Table is invariant under row permutation.
    """

    topic: str
    header: tuple[str, ...]
    rows: tuple[tuple[CellValue, ...], ...]
    column_types: tuple[str, ...]

    def column_index(self, name: str) -> int:
        key = fold(name)
        for i, col in enumerate(self.header):
            if fold(col) == key:
                return i
        raise UnknownColumn(f"no column named {name!r}")

    def column_cells(self, index: int) -> list[CellValue]:
        return [row[index] for row in self.rows]

    def is_numeric(self, index: int) -> bool:
        return self.column_types[index] == NUMERIC

    def has_numbers(self, index: int) -> bool:
        """True if at least one non-empty cell in the column reads as a number."""
        return any(
            cell_number(c) is not None
            for c in self.column_cells(index)
            if render_cell(c).strip()
        )

    def replace_rows(self, rows: tuple[tuple[CellValue, ...], ...]) -> "Table":
        return Table(self.topic, self.header, rows, self.column_types)


@dataclass(frozen=True)
class RowRef:
    """A row together with the table it came from."""

    table: Table
    index: int

    @property
    def cells(self) -> tuple[CellValue, ...]:
        return self.table.rows[self.index]


def _validate_header(header: list[str]) -> tuple[str, ...]:
    trimmed = [h.strip() for h in header]
    if not trimmed:
        raise MalformedInput("empty header")
    seen: set[str] = set()
    for i, name in enumerate(trimmed):
        key = fold(name)
        if key in seen:
            raise MalformedInput(f"duplicate column {name!r} at column {i + 1}")
        seen.add(key)
    return tuple(trimmed)


def _infer_raw_column_types(header: tuple[str, ...], rows: list[list[str]]) -> tuple[str, ...]:
    types = []
    for ci in range(len(header)):
        cells = [row[ci].strip() for row in rows]
        non_empty = [c for c in cells if c]
        if non_empty and all(normalize_numeric_cell(c) is not None for c in non_empty):
            types.append(NUMERIC)
        else:
            types.append(TEXTUAL)
    return tuple(types)


def infer_column_types(table: Table) -> tuple[str, ...]:
    """Re-derive column types from cell content.

    A column is numeric iff it has at least one non-empty cell and every
    non-empty cell reads as a number; otherwise textual. Idempotent on
    parsed tables.
    """
    raw_rows = [[render_cell(c) for c in row] for row in table.rows]
    return _infer_raw_column_types(table.header, raw_rows)


def build_table(topic: str, header: list[str], raw_rows: list[list[str]]) -> Table:
    """Validate, trim, type, and freeze a table from raw string cells."""
    cols = _validate_header(header)
    for i, row in enumerate(raw_rows, start=1):
        if len(row) != len(cols):
            raise MalformedInput(
                f"row {i}: expected {len(cols)} cells, got {len(row)}"
            )
    trimmed = [[str(c).strip() for c in row] for row in raw_rows]
    types = _infer_raw_column_types(cols, trimmed)
    rows = []
    for row in trimmed:
        cells: list[CellValue] = []
        for ci, text in enumerate(row):
            if types[ci] == NUMERIC and text:
                num = normalize_numeric_cell(text)
                assert num is not None  # guaranteed by inference
                cells.append(num)
            else:
                cells.append(text)
        rows.append(tuple(cells))
    return Table(topic, cols, tuple(rows), types)


def parse_table(text: str, format: str = "json") -> Table:
    """Parse table text in one of the supported on-disk formats."""
    if format == "json":
        try:
            record = json.loads(text)
        except json.JSONDecodeError as e:
            raise MalformedInput(f"invalid json: {e}") from e
        if not isinstance(record, dict) or "header" not in record or "rows" not in record:
            raise MalformedInput("table json must be an object with header and rows")
        header = [str(h) for h in record["header"]]
        rows = [[str(c) for c in row] for row in record["rows"]]
        return build_table(str(record.get("topic", "")), header, rows)
    if format in ("csv", "tsv"):
        delim = "," if format == "csv" else "\t"
        records = list(csv.reader(io.StringIO(text), delimiter=delim))
        if not records:
            raise MalformedInput("empty input: no header record")
        return build_table("", records[0], records[1:])
    raise MalformedInput(f"unknown table format {format!r}")


def table_to_json(table: Table) -> dict:
    """Wire form: cells rendered back to strings."""
    return {
        "topic": table.topic,
        "header": list(table.header),
        "rows": [[render_cell(c) for c in row] for row in table.rows],
    }


def linearize_table(table: Table) -> str:
    """One-line form: cells joined by ' # ', header and rows joined by ' | '."""
    segments = [" # ".join(table.header)]
    segments.extend(" # ".join(render_cell(c) for c in row) for row in table.rows)
    return " | ".join(segments)


@dataclass(frozen=True, order=True)
class Triple:
    subject: str
    relation: str
    object: str

    def render(self) -> str:
        return f"{self.subject} | {self.relation} | {self.object}"


@dataclass(frozen=True)
class Graph:
    """A set of triples; all downstream behavior ignores input order."""

    triples: frozenset[Triple]

    def sorted_triples(self) -> list[Triple]:
        return sorted(self.triples)

    def __len__(self) -> int:
        return len(self.triples)


def parse_graph(text: str) -> Graph:
    """Parse ' # '-separated triples with ' | '-separated fields."""
    triples = set()
    for segment in text.split("#"):
        if not segment.strip():
            continue
        fields = [f.strip() for f in segment.split("|")]
        if len(fields) != 3:
            raise MalformedInput(
                f"triple {segment.strip()!r}: expected 3 fields, got {len(fields)}"
            )
        if not all(fields):
            raise MalformedInput(f"triple {segment.strip()!r}: empty field")
        triples.add(Triple(*fields))
    if not triples:
        raise MalformedInput("graph has no triples")
    return Graph(frozenset(triples))


def serialize_graph(graph: Graph) -> str:
    return " # ".join(t.render() for t in graph.sorted_triples())
