"""Error types shared across the package.

Faults that occur while *running* a MiniJ program are not exceptions: the
interpreter reports them through the state's status channel. The classes here
are for rejecting bad inputs (source text, pipelines, candidates) and for
internal contract violations.
"""

from __future__ import annotations


class StreamifyError(Exception):
    pass


class MiniJSyntaxError(StreamifyError):
    """Source text does not parse. Carries 1-based line/column."""

    def __init__(self, message: str, line: int, col: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.expected = expected
        suffix = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{suffix}")


class UnsupportedConstruct(StreamifyError):
    """Recognizably Java, but outside the MiniJ subset."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class BindingError(StreamifyError):
    """Undeclared, unbound, or doubly-declared variable."""


class TypeCheckError(StreamifyError):
    """Ill-typed expression or statement."""


class IllFormedSegment(StreamifyError):
    """A segment [x, y) whose end is not reachable from its start."""


class MissingBinding(StreamifyError):
    """A stream op referenced a heap name that is not bound."""


class NoSourceSegment(StreamifyError):
    """cut_at_iterator on a term whose source segment is already cut."""


class ShapeMismatch(StreamifyError):
    """Candidate shape does not line up with the program's loops/outputs."""


class PipelineParseError(StreamifyError):
    """Pipeline text does not parse. Carries the 1-based line."""

    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UntranslatableOp(StreamifyError):
    """No Java stream rendering for this op in this position."""


class TimeoutExceeded(StreamifyError):
    """The synthesis deadline passed mid-verification or mid-search."""


class NotRefactorableError(StreamifyError):
    """The original program faults or runs out of fuel on some pre-state.

    A stream pipeline cannot reproduce a fault, so no refactoring exists.
    Carries the offending pre-state as a constructor sequence plus the
    fault kind from the interpreter's status channel.
    """

    def __init__(self, constructors: tuple[str, ...], fault: str):
        self.constructors = constructors
        self.fault = fault
        super().__init__(f"original program fails with {fault}")
