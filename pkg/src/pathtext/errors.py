"""Error hierarchy shared across the engine.

Every domain failure inherits from :class:`EngineError` so the CLI can map it
to a structured error record and a stable exit code.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine failures. Exit code 1 unless overridden."""

    exit_code = 1


class MalformedInput(EngineError):
    """Input file/text violates its declared format (bad arity, header, ...)."""


class PathSyntaxError(EngineError):
    """Reasoning-path text fails to parse."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class UnknownModule(EngineError):
    pass


class ArityMismatch(EngineError):
    pass


class TypeMismatch(EngineError):
    def __init__(self, position: int, expected: str, found: str):
        self.position = position
        self.expected = expected
        self.found = found
        super().__init__(f"argument {position}: expected {expected}, found {found}")


class UnknownColumn(EngineError):
    pass


class NonNumericColumn(EngineError):
    pass


class EmptyTable(EngineError):
    pass


class EvaluationError(EngineError):
    """A module failed during path evaluation; carries the failing subpath."""

    def __init__(self, message: str, subpath: str):
        self.subpath = subpath
        super().__init__(f"{message} [in: {subpath}]")


class EmptyInput(EngineError):
    pass


class MissingSlot(EngineError):
    pass


class LengthMismatch(EngineError):
    pass


class InstanceTooLarge(EngineError):
    pass


class InvalidGoldPath(EngineError):
    pass


class BackendUnavailable(EngineError):
    exit_code = 3


class BackendProtocolError(EngineError):
    exit_code = 3


class EmptyGeneration(EngineError):
    exit_code = 3
