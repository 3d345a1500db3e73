"""List-segment theory: the operator vocabulary candidates are built from.

Every operator works on a segment [x, y) of a chain in a graph heap — x and y
are reference names, y may be None meaning "to the end of the chain". The
recursive definitions bottom out when x aliases y; constructive operators
(filter, map, sorted, skip, limit, copy, concat, removeVal) extend the heap
with a result chain and never touch existing nodes, so evaluation is pure.

Two deliberate points of interpretation, recorded here because they differ
from a literal transcription of the recursive rules:

  * reduce is a left fold of the accumulator over the segment starting from
    the identity element (the rule text drops the element value on one side;
    a fold is the only reading consistent with reduce(0, +) summing a list);
  * skip shares the remainder of the source chain when the segment runs to
    the end (the rules' base case), but copies when an explicit segment end
    is given — sharing past the end marker would leak nodes outside the
    segment into the result.

min/max over an empty segment return infinity sentinels chosen outside the
32-bit value range so they can never collide with list contents.

Indexed mutators (add/set/remove) are value-faithful: they rebind the source
reference to a fresh chain holding the updated sequence. In-place Java
semantics (aliases observing the update) live in the interpreter, not here —
these operators exist for candidate semantics, where every visible effect is
a fresh-value binding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .errors import IllFormedSegment, MissingBinding
from .heap import Heap
from .interp import jmod, wrap32

P_INF = 2**63 - 1   # min() of an empty segment
N_INF = -(2**63 - 1)  # max() of an empty segment


# --------------------------------------------------------------------------
# Lambdas and constants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SizeRef:
    """A constant that names the pre-state size of a parameter list."""

    name: str

    def __str__(self) -> str:
        return f"{self.name}.size()"


Const = Union[int, SizeRef]


def resolve(c: Const, env: dict) -> int:
    if isinstance(c, SizeRef):
        sizes = env.get("sizes", {})
        if c.name not in sizes:
            raise MissingBinding(f"no size binding for '{c.name}'")
        return sizes[c.name]
    return c


@dataclass(frozen=True)
class CmpAtom:
    op: str  # == != < <= > >=
    c: int

    def test(self, v: int) -> bool:
        match self.op:
            case "==": return v == self.c
            case "!=": return v != self.c
            case "<": return v < self.c
            case "<=": return v <= self.c
            case ">": return v > self.c
            case ">=": return v >= self.c
        raise AssertionError(self.op)

    def __str__(self) -> str:
        return f"v {self.op} {self.c}"


@dataclass(frozen=True)
class ModAtom:
    k: int  # modulus >= 2
    r: int  # Java remainder to match, |r| < k

    def test(self, v: int) -> bool:
        return jmod(v, self.k) == self.r

    def __str__(self) -> str:
        return f"v % {self.k} == {self.r}"


Atom = Union[CmpAtom, ModAtom]


@dataclass(frozen=True)
class Pred:
    atoms: tuple[Atom, ...]  # conjunction, 1..2 atoms

    def test(self, v: int) -> bool:
        return all(a.test(v) for a in self.atoms)

    def __str__(self) -> str:
        return " && ".join(str(a) for a in self.atoms)


@dataclass(frozen=True)
class Mapper:
    """v -> a*v + b."""

    a: int
    b: Const

    def apply(self, v: int, env: dict) -> int:
        return wrap32(self.a * v + resolve(self.b, env))

    def __str__(self) -> str:
        b = str(self.b)
        if self.a == 0:
            return b
        head = "v" if self.a == 1 else ("-v" if self.a == -1 else f"{self.a} * v")
        if isinstance(self.b, int) and self.b == 0:
            return head
        if isinstance(self.b, int) and self.b < 0:
            return f"{head} - {-self.b}"
        return f"{head} + {b}"


@dataclass(frozen=True)
class Acc:
    op: str  # + min max *

    def apply(self, a: int, b: int) -> int:
        match self.op:
            case "+": return wrap32(a + b)
            case "*": return wrap32(a * b)
            case "min": return a if a <= b else b
            case "max": return a if a >= b else b
        raise AssertionError(self.op)

    def __str__(self) -> str:
        match self.op:
            case "+": return "(a, b) -> a + b"
            case "*": return "(a, b) -> a * b"
            case "min": return "Math::min"
            case "max": return "Math::max"
        raise AssertionError(self.op)


# --------------------------------------------------------------------------
# Segment access
# --------------------------------------------------------------------------


def segment_values(h: Heap, x: str, y: Optional[str]) -> tuple[int, ...]:
    start = h.ref(x)
    end = None if y is None else h.ref(y)
    return h.values_from(start, end)


def _bind_fresh(h: Heap, values: tuple[int, ...], ret: str) -> Heap:
    h2, head = h.alloc_chain(values)
    return h2.set_ref(ret, head)


# --------------------------------------------------------------------------
# Operators
# --------------------------------------------------------------------------


def op_new(h: Heap, ret: str) -> Heap:
    return h.set_ref(ret, None)


def op_copy(h: Heap, x: str, y: Optional[str], ret: str) -> Heap:
    return _bind_fresh(h, segment_values(h, x, y), ret)


def op_alias(h: Heap, x: str, y: Optional[str]) -> bool:
    end = None if y is None else h.ref(y)
    return h.ref(x) == end


def op_add_last(h: Heap, x: str, v: int) -> Heap:
    return _bind_fresh(h, h.list_values(x) + (wrap32(v),), x)


def op_add(h: Heap, x: str, i: int, v: int) -> Heap:
    vals = h.list_values(x)
    if not (0 <= i <= len(vals)):
        raise IllFormedSegment(f"add index {i} outside [0, {len(vals)}]")
    return _bind_fresh(h, vals[:i] + (wrap32(v),) + vals[i:], x)


def op_set(h: Heap, x: str, i: int, v: int) -> Heap:
    vals = h.list_values(x)
    if not (0 <= i < len(vals)):
        raise IllFormedSegment(f"set index {i} outside [0, {len(vals)})")
    return _bind_fresh(h, vals[:i] + (wrap32(v),) + vals[i + 1:], x)


def op_remove(h: Heap, x: str, i: int) -> Heap:
    vals = h.list_values(x)
    if not (0 <= i < len(vals)):
        raise IllFormedSegment(f"remove index {i} outside [0, {len(vals)})")
    return _bind_fresh(h, vals[:i] + vals[i + 1:], x)


def op_remove_val(h: Heap, x: str, y: Optional[str], v: int, ret: str) -> Heap:
    vals = list(segment_values(h, x, y))
    if v in vals:
        vals.remove(v)  # first occurrence only
    return _bind_fresh(h, tuple(vals), ret)


def op_get(h: Heap, x: str, y: Optional[str], i: int) -> int:
    vals = segment_values(h, x, y)
    if not (0 <= i < len(vals)):
        raise IllFormedSegment(f"get index {i} outside [0, {len(vals)})")
    return vals[i]


def op_size(h: Heap, x: str, y: Optional[str]) -> int:
    return len(segment_values(h, x, y))


def op_exists(h: Heap, x: str, y: Optional[str], p: Pred) -> bool:
    return any(p.test(v) for v in segment_values(h, x, y))


def op_forall(h: Heap, x: str, y: Optional[str], p: Pred) -> bool:
    return all(p.test(v) for v in segment_values(h, x, y))


def op_min(h: Heap, x: str, y: Optional[str]) -> int:
    vals = segment_values(h, x, y)
    return min(vals) if vals else P_INF


def op_max(h: Heap, x: str, y: Optional[str]) -> int:
    vals = segment_values(h, x, y)
    return max(vals) if vals else N_INF


def op_filter(h: Heap, x: str, y: Optional[str], p: Pred, ret: str) -> Heap:
    kept = tuple(v for v in segment_values(h, x, y) if p.test(v))
    return _bind_fresh(h, kept, ret)


def op_map(h: Heap, x: str, y: Optional[str], f: Mapper, ret: str,
           env: dict | None = None) -> Heap:
    mapped = tuple(f.apply(v, env or {}) for v in segment_values(h, x, y))
    return _bind_fresh(h, mapped, ret)


def op_sorted(h: Heap, x: str, y: Optional[str], ret: str) -> Heap:
    """Selection semantics: repeatedly extract the minimum."""
    rest = list(segment_values(h, x, y))
    out: list[int] = []
    while rest:
        m = min(rest)
        rest.remove(m)
        out.append(m)
    return _bind_fresh(h, tuple(out), ret)


def op_skip(h: Heap, x: str, y: Optional[str], done: int, n: int,
            ret: str) -> Heap:
    """Drop n elements; `done` counts elements already skipped.

    When the segment runs to the end of the chain (y is None) the remainder
    is shared, mirroring the base rule ret -> L_P(h)(x); with an explicit end
    the remainder is copied so the result stays inside the segment.
    """
    if n < 0:
        raise IllFormedSegment(f"skip count {n} negative")
    cur = h.ref(x)
    end = None if y is None else h.ref(y)
    while n > 0 and cur != end:
        if cur is None:
            raise IllFormedSegment("segment end not reachable from start")
        cur = h.succ(cur)
        done += 1
        n -= 1
    if y is None:
        return h.set_ref(ret, cur)
    return _bind_fresh(h, h.values_from(cur, end), ret)


def op_limit(h: Heap, x: str, y: Optional[str], n: int, ret: str) -> Heap:
    if n < 0:
        raise IllFormedSegment(f"limit count {n} negative")
    vals = segment_values(h, x, y)
    return _bind_fresh(h, vals[:n], ret)


def op_reduce(h: Heap, x: str, y: Optional[str], v0: int, f: Acc) -> int:
    acc = v0
    for v in segment_values(h, x, y):
        acc = f.apply(acc, v)
    return acc


def op_concat(h: Heap, x1: str, y1: Optional[str], x2: str, y2: Optional[str],
              ret: str) -> Heap:
    vals = segment_values(h, x1, y1) + segment_values(h, x2, y2)
    return _bind_fresh(h, vals, ret)


def op_equal_lists(h1: Heap, x1: str, y1: Optional[str],
                   h2: Heap, x2: str, y2: Optional[str]) -> bool:
    return segment_values(h1, x1, y1) == segment_values(h2, x2, y2)


def op_get_iterator(h: Heap, x: str, ret: str) -> Heap:
    return h.set_ref(ret, h.ref(x))


# --------------------------------------------------------------------------
# Generic dispatch
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class JstOp:
    opcode: str
    args: tuple


OPCODES = (
    "add", "add_last", "set", "get", "size", "alias", "remove", "removeVal",
    "exists", "forall", "sorted", "min", "max", "filter", "map", "skip",
    "limit", "reduce", "concat", "copy", "new", "equalLists", "getIterator",
)


def eval_op(op: JstOp, h: Heap, env: dict | None = None):
    """Evaluate one operator; returns (heap, scalar-or-bool result or None)."""
    env = env or {}
    a = op.args
    match op.opcode:
        case "new":
            return op_new(h, a[0]), None
        case "copy":
            return op_copy(h, a[0], a[1], a[2]), None
        case "alias":
            return h, op_alias(h, a[0], a[1])
        case "add":
            return op_add(h, a[0], resolve(a[1], env), resolve(a[2], env)), None
        case "add_last":
            return op_add_last(h, a[0], resolve(a[1], env)), None
        case "set":
            return op_set(h, a[0], resolve(a[1], env), resolve(a[2], env)), None
        case "remove":
            return op_remove(h, a[0], resolve(a[1], env)), None
        case "removeVal":
            return op_remove_val(h, a[0], a[1], resolve(a[2], env), a[3]), None
        case "get":
            return h, op_get(h, a[0], a[1], resolve(a[2], env))
        case "size":
            return h, op_size(h, a[0], a[1])
        case "exists":
            return h, op_exists(h, a[0], a[1], a[2])
        case "forall":
            return h, op_forall(h, a[0], a[1], a[2])
        case "sorted":
            return op_sorted(h, a[0], a[1], a[2]), None
        case "min":
            return h, op_min(h, a[0], a[1])
        case "max":
            return h, op_max(h, a[0], a[1])
        case "filter":
            return op_filter(h, a[0], a[1], a[2], a[3]), None
        case "map":
            return op_map(h, a[0], a[1], a[2], a[3], env), None
        case "skip":
            return op_skip(h, a[0], a[1], resolve(a[2], env),
                           resolve(a[3], env), a[4]), None
        case "limit":
            return op_limit(h, a[0], a[1], resolve(a[2], env), a[3]), None
        case "reduce":
            return h, op_reduce(h, a[0], a[1], resolve(a[2], env), a[3])
        case "concat":
            return op_concat(h, a[0], a[1], a[2], a[3], a[4]), None
        case "equalLists":
            return h, op_equal_lists(h, a[0], a[1], a[2], a[3], a[4])
        case "getIterator":
            return op_get_iterator(h, a[0], a[1]), None
    raise MissingBinding(f"unknown opcode '{op.opcode}'")
