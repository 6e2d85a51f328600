"""Datatype production rules and candidate-step enumeration.

The grammar constrains which modules may extend a partial path: a module is
plausible for a transition when its first input type matches the current
value's type and its output type is produced by a rule. Enumeration order is
a pure function of table content so searches stay deterministic under row
shuffles: modules sort by name, columns by header position, operands by
value (numeric ascending, text case-folded ascending).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from enum import Enum

from .data import NUMERIC, Table, cell_number, fold, render_cell, render_number
from .dsl import Apply, DataType, Literal, PathNode
from .modules import (
    ModuleRegistry,
    ModuleSpec,
    RowV,
    StrV,
    TableV,
    Value,
    value_type,
)


class GrammarId(Enum):
    TABLE_TO_TEXT = "table"
    GRAPH_TO_TEXT = "graph"


_T = DataType.TABLE
_R = DataType.ROW
_N = DataType.NUMBER
_S = DataType.STRING
_B = DataType.BOOL

_TABLE_RULES: dict[DataType, frozenset[DataType]] = {
    _T: frozenset({_T, _R, _N, _B}),
    _R: frozenset({_S, _N}),
    _S: frozenset({_B}),
    _N: frozenset({_B}),
}

_GRAPH_RULES: dict[DataType, frozenset[DataType]] = {
    DataType.TRIPLE: frozenset({_S}),
    _S: frozenset({_S}),  # fusion pair rule, keyed on its first argument
}

# Terminal surface-realization rule for the table task; it turns a finished
# path into text and never participates in partial-path expansion.
TABLE_SURFACE_RULE = ((_T, DataType.PATH), _S)


def productions(grammar: GrammarId, from_type: DataType) -> frozenset[DataType]:
    """Datatypes reachable from `from_type` in one step; empty at terminals."""
    rules = _TABLE_RULES if grammar == GrammarId.TABLE_TO_TEXT else _GRAPH_RULES
    return rules.get(from_type, frozenset())


def plausible_modules(
    grammar: GrammarId,
    from_type: DataType,
    to_type: DataType,
    reg: ModuleRegistry,
) -> list[ModuleSpec]:
    """Registry modules with first input `from_type` and output `to_type`."""
    if to_type not in productions(grammar, from_type):
        return []
    return sorted(
        (
            s
            for s in reg.specs()
            if s.input_types and s.input_types[0] == from_type and s.output_type == to_type
        ),
        key=lambda s: s.name,
    )


@dataclass(frozen=True)
class CandidateStep:
    """One admissible extension: a module plus its concrete trailing arguments.

    The first module input is the current partial path and is grafted on by
    the caller; `args` holds the remaining (literal) arguments.
    """

    module: ModuleSpec
    args: tuple[PathNode, ...]
    produced_type: DataType


def _distinct_text_operands(table: Table, ci: int) -> list[str]:
    values = {
        fold(render_cell(c))
        for c in table.column_cells(ci)
        if render_cell(c).strip()
    }
    return sorted(values)


def _distinct_number_operands(table: Table, ci: int) -> list[str]:
    values: set[Decimal] = set()
    for c in table.column_cells(ci):
        num = cell_number(c)
        if num is not None:
            values.add(num)
    return [render_number(v) for v in sorted(values)]


def _column_indices(table: Table, need: str) -> list[int]:
    if need == NUMERIC:
        return [i for i in range(len(table.header)) if table.is_numeric(i)]
    if need == "numericish":
        return [i for i in range(len(table.header)) if table.has_numbers(i)]
    return list(range(len(table.header)))


def _table_steps(spec: ModuleSpec, table: Table, reg: ModuleRegistry) -> list[CandidateStep]:
    if len(spec.input_types) == 1:  # count, only
        return [CandidateStep(spec, (), spec.output_type)]
    steps = []
    need = reg.column_kind(spec.name)
    for ci in _column_indices(table, need):
        col = Literal(table.header[ci])
        if len(spec.input_types) == 2:  # filter_all, arg_*, aggregations
            steps.append(CandidateStep(spec, (col,), spec.output_type))
            continue
        if spec.input_types[2] == _N:
            operands = _distinct_number_operands(table, ci)
        else:
            operands = _distinct_text_operands(table, ci)
        steps.extend(
            CandidateStep(spec, (col, Literal(op)), spec.output_type) for op in operands
        )
    return steps


def _hopped_column(path: PathNode | None) -> str | None:
    if isinstance(path, Apply) and path.module == "hop":
        arg = path.args[1]
        if isinstance(arg, Literal):
            return arg.text
    return None


def enumerate_steps(
    state_value: Value,
    root: Table,
    reg: ModuleRegistry,
    grammar: GrammarId = GrammarId.TABLE_TO_TEXT,
    current_path: PathNode | None = None,
) -> list[CandidateStep]:
    """All plausible next steps from a partial path's output value.

    String-valued states only extend through eq, whose operand space is the
    distinct content of the column hopped to produce the state (resolved
    against the root table); without that provenance no step is emitted.
    """
    from_type = value_type(state_value)
    modules: list[ModuleSpec] = []
    for to_type in productions(grammar, from_type):
        modules.extend(plausible_modules(grammar, from_type, to_type, reg))
    modules.sort(key=lambda s: s.name)

    steps: list[CandidateStep] = []
    for spec in modules:
        if isinstance(state_value, TableV):
            steps.extend(_table_steps(spec, state_value.table, reg))
        elif isinstance(state_value, RowV) and spec.name == "hop":
            header = state_value.row.table.header
            steps.extend(
                CandidateStep(spec, (Literal(name),), spec.output_type) for name in header
            )
        elif isinstance(state_value, StrV) and spec.name == "eq":
            col = _hopped_column(current_path)
            if col is None:
                continue
            ci = root.column_index(col)
            if root.is_numeric(ci):
                operands = _distinct_number_operands(root, ci)
            else:
                operands = _distinct_text_operands(root, ci)
            steps.extend(
                CandidateStep(spec, (Literal(op),), spec.output_type) for op in operands
            )
    return steps
