"""Module catalog and the recursive path evaluator.

Symbolic modules are total deterministic table/string operators; neural
modules only carry signatures here and are executed through the gateway.
All string comparisons are case-insensitive and trimmed; numbers compare
within 1e-9 relative tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Context, Decimal

from .data import (
    NUMERIC,
    Table,
    RowRef,
    cell_number,
    fold,
    normalize_numeric_cell,
    render_cell,
    render_number,
    table_to_json,
)
from .dsl import (
    AllRows,
    Apply,
    DataType,
    Literal,
    PathNode,
    serialize_path,
)
from .errors import (
    EmptyTable,
    EngineError,
    EvaluationError,
    NonNumericColumn,
    TypeMismatch,
    UnknownModule,
)

SYMBOLIC = "symbolic"
NEURAL = "neural"

# Fixed-precision decimal arithmetic keeps avg/sum reproducible across platforms.
_CTX = Context(prec=12)

_REL_TOL = Decimal("1e-9")


def num_eq(a: Decimal, b: Decimal) -> bool:
    if a == b:
        return True
    return abs(a - b) <= max(abs(a), abs(b)) * _REL_TOL


@dataclass(frozen=True)
class ModuleSpec:
    name: str
    kind: str
    input_types: tuple[DataType, ...]
    output_type: DataType
    description: str


@dataclass(frozen=True)
class TableV:
    table: Table


@dataclass(frozen=True)
class RowV:
    row: RowRef


@dataclass(frozen=True)
class NumV:
    value: Decimal


@dataclass(frozen=True)
class StrV:
    value: str


@dataclass(frozen=True)
class BoolV:
    value: bool


Value = TableV | RowV | NumV | StrV | BoolV


def value_type(v: Value) -> DataType:
    if isinstance(v, TableV):
        return DataType.TABLE
    if isinstance(v, RowV):
        return DataType.ROW
    if isinstance(v, NumV):
        return DataType.NUMBER
    if isinstance(v, StrV):
        return DataType.STRING
    return DataType.BOOL


def render_value(v: Value) -> str:
    import json

    if isinstance(v, BoolV):
        return "true" if v.value else "false"
    if isinstance(v, NumV):
        return render_number(v.value)
    if isinstance(v, StrV):
        return v.value
    if isinstance(v, RowV):
        return json.dumps([render_cell(c) for c in v.row.cells])
    return json.dumps(table_to_json(v.table))


_T = DataType.TABLE
_R = DataType.ROW
_N = DataType.NUMBER
_S = DataType.STRING
_B = DataType.BOOL

# (name, kind, inputs, output, description); catalog order is load-bearing
# for deterministic enumeration and the signature self-check.
_CATALOG: tuple[tuple[str, str, tuple[DataType, ...], DataType, str], ...] = (
    ("filter_eq", SYMBOLIC, (_T, _S, _S), _T, "Rows whose cell in the given column equals the value."),
    ("filter_not_eq", SYMBOLIC, (_T, _S, _S), _T, "Rows whose cell in the given column differs from the value."),
    ("filter_greater", SYMBOLIC, (_T, _S, _N), _T, "Rows whose number in the given column exceeds the operand."),
    ("filter_greater_eq", SYMBOLIC, (_T, _S, _N), _T, "Rows whose number in the given column is at least the operand."),
    ("filter_lesser", SYMBOLIC, (_T, _S, _N), _T, "Rows whose number in the given column is below the operand."),
    ("filter_lesser_eq", SYMBOLIC, (_T, _S, _N), _T, "Rows whose number in the given column is at most the operand."),
    ("filter_all", SYMBOLIC, (_T, _S), _T, "The input table unchanged; the column argument is ignored."),
    ("arg_max", SYMBOLIC, (_T, _S), _R, "The row holding the largest number in the given column."),
    ("arg_min", SYMBOLIC, (_T, _S), _R, "The row holding the smallest number in the given column."),
    ("max", SYMBOLIC, (_T, _S), _N, "Largest number in the given column."),
    ("min", SYMBOLIC, (_T, _S), _N, "Smallest number in the given column."),
    ("avg", SYMBOLIC, (_T, _S), _N, "Sum of the numbers in the given column divided by the row count."),
    ("sum", SYMBOLIC, (_T, _S), _N, "Total of the numbers in the given column."),
    ("count", SYMBOLIC, (_T,), _N, "Number of rows in the table."),
    ("all_eq", SYMBOLIC, (_T, _S, _S), _B, "True when every non-empty cell in the column equals the value."),
    ("all_not_eq", SYMBOLIC, (_T, _S, _S), _B, "True when every non-empty cell in the column differs from the value."),
    ("all_greater", SYMBOLIC, (_T, _S, _N), _B, "True when every non-empty cell in the column exceeds the operand."),
    ("all_less", SYMBOLIC, (_T, _S, _N), _B, "True when every non-empty cell in the column is below the operand."),
    ("all_greater_eq", SYMBOLIC, (_T, _S, _N), _B, "True when every non-empty cell in the column is at least the operand."),
    ("all_less_eq", SYMBOLIC, (_T, _S, _N), _B, "True when every non-empty cell in the column is at most the operand."),
    ("most_eq", SYMBOLIC, (_T, _S, _S), _B, "True when more than half of the rows carry the value in the column."),
    ("most_not_eq", SYMBOLIC, (_T, _S, _S), _B, "True when more than half of the rows differ from the value in the column."),
    ("most_greater", SYMBOLIC, (_T, _S, _N), _B, "True when more than half of the rows exceed the operand in the column."),
    ("most_less", SYMBOLIC, (_T, _S, _N), _B, "True when more than half of the rows are below the operand in the column."),
    ("most_greater_eq", SYMBOLIC, (_T, _S, _N), _B, "True when more than half of the rows reach the operand in the column."),
    ("most_less_eq", SYMBOLIC, (_T, _S, _N), _B, "True when more than half of the rows are at most the operand in the column."),
    ("only", SYMBOLIC, (_T,), _B, "True when the table has exactly one row."),
    ("hop", SYMBOLIC, (_R, _S), _S, "The row's cell in the given column, rendered as text."),
    ("eq", SYMBOLIC, (_S, _S), _B, "True when the two strings match, numerically when both are numbers."),
    ("surface_realization_triple", NEURAL, (DataType.TRIPLE,), _S, "Verbalize one subject-relation-object triple."),
    ("text_fusion", NEURAL, (_S, _S), _S, "Merge two sentences into one coherent sentence."),
    ("surface_realization_path", NEURAL, (_T, DataType.PATH), _S, "Verbalize a reasoning path over a table."),
)

# Which argument positions name a column, and what that column must hold:
# "numeric" demands a numeric-typed column, "numericish" demands at least one
# numeric cell (mixed columns like golf to-par stay usable for most_*/all_*),
# "any" accepts every column.
_NUMERICISH = "numericish"
_ANY = "any"

_STRICT_NUMERIC = {
    "filter_greater", "filter_greater_eq", "filter_lesser", "filter_lesser_eq",
    "arg_max", "arg_min", "max", "min", "avg", "sum",
}
_NUMERICISH_MODULES = {
    "all_greater", "all_less", "all_greater_eq", "all_less_eq",
    "most_greater", "most_less", "most_greater_eq", "most_less_eq",
}
_NO_COLUMN = {"count", "only", "eq", "surface_realization_triple", "text_fusion", "surface_realization_path"}

_ALIASES = {"argmax": "arg_max", "argmin": "arg_min"}


class ModuleRegistry:
    """All module specs, keyed by name, with alias-aware lookup."""

    def __init__(self, specs: list[ModuleSpec]):
        self._specs = {s.name: s for s in specs}

    def resolve(self, name: str) -> ModuleSpec:
        canonical = _ALIASES.get(name, name)
        spec = self._specs.get(canonical)
        if spec is None:
            raise UnknownModule(f"no module named {name!r}")
        return spec

    lookup = resolve

    def __contains__(self, name: str) -> bool:
        return _ALIASES.get(name, name) in self._specs

    def specs(self) -> list[ModuleSpec]:
        return list(self._specs.values())

    def symbolic_specs(self) -> list[ModuleSpec]:
        return [s for s in self._specs.values() if s.kind == SYMBOLIC]

    def column_positions(self, name: str) -> tuple[int, ...]:
        spec = self.resolve(name)
        if spec.name in _NO_COLUMN:
            return ()
        return (1,)

    def column_kind(self, name: str) -> str:
        spec = self.resolve(name)
        if spec.name in _STRICT_NUMERIC:
            return NUMERIC
        if spec.name in _NUMERICISH_MODULES:
            return _NUMERICISH
        return _ANY


def registry_default() -> ModuleRegistry:
    return ModuleRegistry([ModuleSpec(*row) for row in _CATALOG])


def _column(table: Table, col: str) -> int:
    return table.column_index(col)


def _require_numeric(table: Table, ci: int, module: str) -> None:
    if not table.is_numeric(ci):
        raise NonNumericColumn(
            f"{module} needs a numeric column, {table.header[ci]!r} is textual"
        )


def _require_numericish(table: Table, ci: int, module: str) -> None:
    if not table.has_numbers(ci):
        raise NonNumericColumn(
            f"{module} needs numbers in column {table.header[ci]!r}, found none"
        )


def _string_match(cell, operand: str, numeric_column: bool) -> bool:
    if numeric_column and isinstance(cell, Decimal):
        op_num = normalize_numeric_cell(operand)
        if op_num is not None:
            return num_eq(cell, op_num)
    return fold(render_cell(cell)) == fold(operand)


_RELATIONS = {
    "greater": lambda a, b: a > b,
    "greater_eq": lambda a, b: a >= b,
    "lesser": lambda a, b: a < b,
    "lesser_eq": lambda a, b: a <= b,
    "less": lambda a, b: a < b,
    "less_eq": lambda a, b: a <= b,
}


def _operand_number(operand: str, module: str) -> Decimal:
    num = normalize_numeric_cell(operand)
    if num is None:
        raise TypeMismatch(2, "number", f"literal {operand!r}")
    return num


def exec_filter(name: str, table: Table, col: str, operand: str | None) -> Table:
    """filter_* family; preserves header and column types, may return 0 rows."""
    if name == "filter_all":
        _column(table, col)
        return table
    ci = _column(table, col)
    if name in ("filter_eq", "filter_not_eq"):
        assert operand is not None
        numeric = table.is_numeric(ci)
        keep = []
        for row in table.rows:
            cell = row[ci]
            if not render_cell(cell).strip():
                continue  # empty cells match nothing, in either direction
            hit = _string_match(cell, operand, numeric)
            if hit == (name == "filter_eq"):
                keep.append(row)
        return table.replace_rows(tuple(keep))
    rel = _RELATIONS[name.removeprefix("filter_")]
    _require_numeric(table, ci, name)
    bound = _operand_number(operand or "", name)
    keep = [
        row for row in table.rows
        if isinstance(row[ci], Decimal) and rel(row[ci], bound)
    ]
    return table.replace_rows(tuple(keep))


def _numeric_cells(table: Table, ci: int, module: str) -> list[tuple[int, Decimal]]:
    if not table.rows:
        raise EmptyTable(f"{module} on a table with no rows")
    out = [(i, row[ci]) for i, row in enumerate(table.rows) if isinstance(row[ci], Decimal)]
    if not out:
        raise EmptyTable(f"{module}: every cell in {table.header[ci]!r} is empty")
    return out


def exec_aggregate(name: str, table: Table, col: str | None):
    """max/min/avg/sum -> Decimal; arg_max/arg_min -> RowRef; count -> Decimal."""
    if name == "count":
        return Decimal(len(table.rows))
    assert col is not None
    if not table.rows:
        raise EmptyTable(f"{name} on a table with no rows")
    ci = _column(table, col)
    _require_numeric(table, ci, name)
    cells = _numeric_cells(table, ci, name)
    if name in ("arg_max", "arg_min"):
        # ties break toward the lowest original row index
        better = (lambda a, b: a > b) if name == "arg_max" else (lambda a, b: a < b)
        best_i, best_v = cells[0]
        for i, v in cells[1:]:
            if better(v, best_v):
                best_i, best_v = i, v
        return RowRef(table, best_i)
    values = [v for _, v in cells]
    if name == "max":
        return max(values)
    if name == "min":
        return min(values)
    total = Decimal(0)
    for v in values:
        total = _CTX.add(total, v)
    if name == "sum":
        return total
    if name == "avg":
        return _CTX.divide(total, Decimal(len(table.rows)))
    raise UnknownModule(f"no aggregate named {name!r}")


def exec_boolean(name: str, table: Table, col: str | None, operand: str | None) -> bool:
    """all_*/most_*/only; most_* needs strictly more than half of all rows."""
    if name == "only":
        return len(table.rows) == 1
    assert col is not None and operand is not None
    if not table.rows:
        raise EmptyTable(f"{name} on a table with no rows")
    ci = _column(table, col)
    if name in ("all_eq", "all_not_eq", "most_eq", "most_not_eq"):
        numeric = table.is_numeric(ci)
        want = not name.endswith("not_eq")

        def satisfies(cell) -> bool:
            return _string_match(cell, operand, numeric) == want
    else:
        _require_numericish(table, ci, name)
        rel = _RELATIONS[name.split("_", 1)[1]]
        bound = _operand_number(operand, name)

        def satisfies(cell) -> bool:
            num = cell_number(cell)
            return num is not None and rel(num, bound)

    non_empty = [c for c in table.column_cells(ci) if render_cell(c).strip()]
    if name.startswith("all_"):
        if not non_empty:
            raise EmptyTable(f"{name}: every cell in {table.header[ci]!r} is empty")
        return all(satisfies(c) for c in non_empty)
    hits = sum(1 for c in non_empty if satisfies(c))
    return 2 * hits > len(table.rows)


def exec_hop(row: RowRef, col: str) -> str:
    ci = row.table.column_index(col)
    return render_cell(row.cells[ci])


def exec_eq(a: str, b: str) -> bool:
    na, nb = normalize_numeric_cell(a), normalize_numeric_cell(b)
    if na is not None and nb is not None:
        return num_eq(na, nb)
    return fold(a) == fold(b)


_FILTERS = {
    "filter_eq", "filter_not_eq", "filter_greater", "filter_greater_eq",
    "filter_lesser", "filter_lesser_eq", "filter_all",
}
_AGGREGATES = {"arg_max", "arg_min", "max", "min", "avg", "sum", "count"}
_BOOLEANS = {
    "all_eq", "all_not_eq", "all_greater", "all_less", "all_greater_eq",
    "all_less_eq", "most_eq", "most_not_eq", "most_greater", "most_less",
    "most_greater_eq", "most_less_eq", "only",
}


def apply_module(spec: ModuleSpec, args: list[Value]) -> Value:
    """Dispatch one evaluated module application."""
    name = spec.name
    if name in _FILTERS:
        operand = None
        if len(args) > 2:
            a2 = args[2]
            operand = render_number(a2.value) if isinstance(a2, NumV) else a2.value
        return TableV(exec_filter(name, args[0].table, args[1].value, operand))
    if name in _AGGREGATES:
        col = args[1].value if len(args) > 1 else None
        out = exec_aggregate(name, args[0].table, col)
        return RowV(out) if isinstance(out, RowRef) else NumV(out)
    if name in _BOOLEANS:
        col = args[1].value if len(args) > 1 else None
        operand = None
        if len(args) > 2:
            a2 = args[2]
            operand = render_number(a2.value) if isinstance(a2, NumV) else a2.value
        return BoolV(exec_boolean(name, args[0].table, col, operand))
    if name == "hop":
        return StrV(exec_hop(args[0].row, args[1].value))
    if name == "eq":
        return BoolV(exec_eq(args[0].value, args[1].value))
    raise EvaluationError(
        f"module {name!r} needs a language-model backend", name
    )


def evaluate_path(table: Table, path: PathNode, reg: ModuleRegistry, trace: list | None = None) -> Value:
    """Post-order evaluation of a symbolic path against a table.

    Errors raised by modules are wrapped with the serialized failing subpath.
    When a trace list is supplied, one record per module application is
    appended: {"module", "inputs", "output"}.
    """
    if isinstance(path, AllRows):
        return TableV(table)
    if isinstance(path, Literal):
        raise EvaluationError("a bare literal is not a path", path.text)
    spec = reg.resolve(path.module)
    if spec.kind == NEURAL:
        raise EvaluationError(
            f"neural module {spec.name!r} needs a language-model backend",
            serialize_path(path),
        )
    args: list[Value] = []
    for arg, want in zip(path.args, spec.input_types):
        if isinstance(arg, Literal):
            if want == DataType.NUMBER:
                num = normalize_numeric_cell(arg.text)
                if num is None:
                    raise EvaluationError(
                        f"literal {arg.text!r} is not a number", serialize_path(path)
                    )
                args.append(NumV(num))
            else:
                args.append(StrV(arg.text))
        else:
            args.append(evaluate_path(table, arg, reg, trace))
    try:
        out = apply_module(spec, args)
    except EvaluationError:
        raise
    except EngineError as e:
        raise EvaluationError(str(e), serialize_path(path)) from e
    if trace is not None:
        trace.append({
            "module": spec.name,
            "inputs": [render_value(a) for a in args],
            "output": render_value(out),
        })
    return out


def referenced_columns(path: PathNode, reg: ModuleRegistry) -> set[str]:
    """Folded names of all columns a path touches (column-position literals)."""
    out: set[str] = set()

    def walk(node: PathNode) -> None:
        if not isinstance(node, Apply):
            return
        try:
            positions = reg.column_positions(node.module)
        except UnknownModule:
            positions = ()
        for i, arg in enumerate(node.args):
            if i in positions and isinstance(arg, Literal):
                out.add(fold(arg.text))
            walk(arg)

    walk(path)
    return out


def outermost_filter(path: PathNode) -> Apply | None:
    """The filter application closest to the root, if any."""
    queue: list[PathNode] = [path]
    while queue:
        node = queue.pop(0)
        if isinstance(node, Apply):
            if _ALIASES.get(node.module, node.module) in _FILTERS:
                return node
            queue.extend(node.args)
    return None
