"""Reasoning-path AST, concrete syntax, and type checking.

A path is a nested module application written as
``name { arg ; arg ; ... }`` with whitespace-separated tokens. ``all_rows``
is the reserved leaf for the root input table; any other non-application
argument is a literal taken verbatim with single internal spaces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .data import NUMERIC, Table, normalize_numeric_cell
from .errors import (
    ArityMismatch,
    NonNumericColumn,
    PathSyntaxError,
    TypeMismatch,
)


class DataType(Enum):
    TABLE = "table"
    ROW = "row"
    NUMBER = "number"
    STRING = "string"
    BOOL = "bool"
    TRIPLE = "triple"
    PATH = "path"


@dataclass(frozen=True)
class Apply:
    module: str
    args: tuple["PathNode", ...]


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class AllRows:
    pass


PathNode = Apply | Literal | AllRows

ALL_ROWS = AllRows()

_RESERVED = "all_rows"
_DELIMS = ("{", "}", ";")


def _tokenize(text: str) -> list[tuple[str, int]]:
    return [(m.group(0), m.start()) for m in re.finditer(r"\S+", text)]


def _check_token(token: str, offset: int) -> None:
    if token in _DELIMS:
        return
    if any(ch in token for ch in "{};"):
        raise PathSyntaxError(f"token {token!r} contains a reserved character", offset)


class _Parser:
    def __init__(self, tokens: list[tuple[str, int]], length: int):
        self.tokens = tokens
        self.length = length

    def peek(self, i: int) -> str | None:
        return self.tokens[i][0] if i < len(self.tokens) else None

    def offset(self, i: int) -> int:
        return self.tokens[i][1] if i < len(self.tokens) else self.length

    def parse_apply(self, i: int) -> tuple[Apply, int]:
        name = self.peek(i)
        if name is None or name in _DELIMS:
            raise PathSyntaxError("expected module name", self.offset(i))
        _check_token(name, self.offset(i))
        if self.peek(i + 1) != "{":
            raise PathSyntaxError(f"expected '{{' after {name!r}", self.offset(i + 1))
        args: list[PathNode] = []
        i += 2
        while True:
            arg, i = self.parse_arg(i)
            args.append(arg)
            tok = self.peek(i)
            if tok == ";":
                i += 1
                continue
            if tok == "}":
                return Apply(name, tuple(args)), i + 1
            raise PathSyntaxError("expected ';' or '}'", self.offset(i))

    def parse_arg(self, i: int) -> tuple[PathNode, int]:
        tok = self.peek(i)
        if tok is None:
            raise PathSyntaxError("unbalanced braces", self.offset(i))
        if tok in ("}", ";"):
            raise PathSyntaxError("empty argument", self.offset(i))
        if self.peek(i + 1) == "{":
            return self.parse_apply(i)
        words = []
        while True:
            tok = self.peek(i)
            if tok is None:
                raise PathSyntaxError("unbalanced braces", self.offset(i))
            if tok in ("}", ";"):
                break
            _check_token(tok, self.offset(i))
            if tok == "{":
                raise PathSyntaxError("unexpected '{'", self.offset(i))
            words.append(tok)
            i += 1
        if words == [_RESERVED]:
            return ALL_ROWS, i
        return Literal(" ".join(words)), i


def parse_path(text: str) -> PathNode:
    """Parse concrete path syntax into an AST.

    Unknown module names are accepted here; they surface later in
    typecheck_path.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PathSyntaxError("empty path", 0)
    parser = _Parser(tokens, len(text))
    node, i = parser.parse_apply(0)
    if i != len(tokens):
        raise PathSyntaxError("trailing input after path", parser.offset(i))
    return node


def serialize_path(node: PathNode) -> str:
    """Canonical form: single spaces around braces and separators."""
    if isinstance(node, AllRows):
        return _RESERVED
    if isinstance(node, Literal):
        return node.text
    inner = " ; ".join(serialize_path(a) for a in node.args)
    return f"{node.module} {{ {inner} }}"


def apply_nodes_postorder(node: PathNode) -> list[Apply]:
    """All module applications in post-order (innermost first)."""
    out: list[Apply] = []

    def walk(n: PathNode) -> None:
        if isinstance(n, Apply):
            for a in n.args:
                walk(a)
            out.append(n)

    walk(node)
    return out


def path_depth(node: PathNode) -> int:
    """Number of module applications in the path."""
    return len(apply_nodes_postorder(node))


def typecheck_path(path: PathNode, reg, ctx: Table) -> DataType:
    """Validate a path against a module registry and a context table.

    Returns the path's output type or raises one of UnknownModule,
    ArityMismatch, TypeMismatch, UnknownColumn, NonNumericColumn.
    """
    return _check(path, reg, ctx, None)


def _node_kind(node: PathNode) -> str:
    if isinstance(node, Apply):
        return f"application of {node.module!r}"
    if isinstance(node, Literal):
        return f"literal {node.text!r}"
    return _RESERVED


def _check(node: PathNode, reg, ctx: Table, expected: DataType | None) -> DataType:
    if isinstance(node, AllRows):
        if expected not in (None, DataType.TABLE):
            raise TypeMismatch(0, expected.value, DataType.TABLE.value)
        return DataType.TABLE
    if isinstance(node, Literal):
        if expected is None:
            raise TypeMismatch(0, "module application", _node_kind(node))
        if expected == DataType.NUMBER:
            if normalize_numeric_cell(node.text) is None:
                raise TypeMismatch(0, DataType.NUMBER.value, f"non-numeric literal {node.text!r}")
            return DataType.NUMBER
        if expected == DataType.STRING:
            return DataType.STRING
        raise TypeMismatch(0, expected.value, _node_kind(node))

    spec = reg.resolve(node.module)
    if len(node.args) != len(spec.input_types):
        raise ArityMismatch(
            f"{spec.name} takes {len(spec.input_types)} arguments, got {len(node.args)}"
        )
    column_positions = reg.column_positions(spec.name)
    for i, (arg, want) in enumerate(zip(node.args, spec.input_types)):
        if want == DataType.PATH:
            _check(arg, reg, ctx, None)
            continue
        got = _check(arg, reg, ctx, want)
        if got != want:
            raise TypeMismatch(i, want.value, got.value)
        if i in column_positions and isinstance(arg, Literal):
            ci = ctx.column_index(arg.text)
            need = reg.column_kind(spec.name)
            if need == NUMERIC and not ctx.is_numeric(ci):
                raise NonNumericColumn(
                    f"{spec.name} needs a numeric column, {arg.text!r} is textual"
                )
            if need == "numericish" and not ctx.has_numbers(ci):
                raise NonNumericColumn(
                    f"{spec.name} needs numbers in column {arg.text!r}, found none"
                )
    return spec.output_type
