"""Heap-explicit intermediate representation.

Lowered MiniJ keeps its structured control flow (loops stay loops so that
verification can attach invariants to them) but every collection operation
becomes an explicit heap step: mutators carry a fresh output heap name, reads
(get/size/hasNext) stay inline as pure expressions over the current heap.
Heap names form a chain along any execution path — `h_i` at entry, one fresh
name per mutator, and the exit rebinds the last name to `h_o`.

Iterator advancement (`next`) is impure, so lowering hoists it out of
expressions into dedicated statements; what remains of an expression is pure
modulo faults (index out of bounds, division by zero), which the interpreter
reports through the status channel rather than as Python exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .syntax import Ty

# --------------------------------------------------------------------------
# Expressions (pure modulo faults)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IConst:
    value: int


@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class IUn:
    op: str  # "!" | "-"
    operand: "IExpr"


@dataclass(frozen=True)
class IBin:
    # "&&" and "||" short-circuit exactly as in Java: the right operand of a
    # guard like `i < l.size() && l.get(i) > 0` must not fault when the left
    # side is already decisive.
    op: str
    left: "IExpr"
    right: "IExpr"


@dataclass(frozen=True)
class IGet:
    list: str
    index: "IExpr"


@dataclass(frozen=True)
class ISize:
    list: str


@dataclass(frozen=True)
class IHasNext:
    iter: str


IExpr = Union[IConst, IVar, IUn, IBin, IGet, ISize, IHasNext]


# --------------------------------------------------------------------------
# Statements
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SAssign:
    name: str
    expr: IExpr


@dataclass(frozen=True)
class SEval:
    """Evaluate for effect-free faults only (e.g. a bare `l.get(9);`)."""

    expr: IExpr


@dataclass(frozen=True)
class SNewList:
    name: str
    h_out: str = ""


@dataclass(frozen=True)
class SAliasList:
    dst: str
    src: str
    h_out: str = ""


@dataclass(frozen=True)
class SIterInit:
    iter: str
    list: str
    h_out: str = ""


@dataclass(frozen=True)
class SNext:
    """Advance an iterator; `dst` is None when the value is discarded."""

    dst: Optional[str]
    iter: str
    h_out: str = ""


@dataclass(frozen=True)
class SRemove:
    iter: str
    h_out: str = ""


@dataclass(frozen=True)
class SAddLast:
    list: str
    value: IExpr
    h_out: str = ""


@dataclass(frozen=True)
class SAddAt:
    list: str
    index: IExpr
    value: IExpr
    h_out: str = ""


@dataclass(frozen=True)
class SSet:
    list: str
    index: IExpr
    value: IExpr
    h_out: str = ""


@dataclass(frozen=True)
class SClear:
    list: str
    h_out: str = ""


@dataclass(frozen=True)
class SIf:
    cond: IExpr
    then: tuple["IRStmt", ...]
    els: tuple["IRStmt", ...]


@dataclass(frozen=True)
class CutRef:
    """Where a loop's progress can be read off for invariant cutting.

    kind "iterator": `var` is an iterator over `list`; the cut position is the
    number of elements consumed. kind "index": `var` is an int index into
    `list`; the cut position is min(var, len(list)).
    """

    kind: str  # "iterator" | "index"
    var: str
    list: str


@dataclass(frozen=True)
class LoopInfo:
    id: int
    parent: Optional[int]
    cuts: tuple[CutRef, ...]


@dataclass(frozen=True)
class SWhile:
    loop: LoopInfo
    cond: IExpr
    body: tuple["IRStmt", ...]
    # For-loop update statements; `continue` jumps here before re-testing.
    update: tuple["IRStmt", ...] = ()


@dataclass(frozen=True)
class SBreak:
    pass


@dataclass(frozen=True)
class SContinue:
    pass


@dataclass(frozen=True)
class SReturn:
    pass


IRStmt = Union[
    SAssign, SEval, SNewList, SAliasList, SIterInit, SNext, SRemove,
    SAddLast, SAddAt, SSet, SClear, SIf, SWhile, SBreak, SContinue, SReturn,
]

MUTATORS = (SNewList, SAliasList, SIterInit, SNext, SRemove,
            SAddLast, SAddAt, SSet, SClear)


# --------------------------------------------------------------------------
# Program
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IRProgram:
    name: str
    # Exactly the method parameters the body actually reads or mutates; these
    # are the nondeterministic pre-state variables.
    params: tuple[tuple[str, Ty], ...]
    locals: tuple[tuple[str, Ty], ...]
    body: tuple[IRStmt, ...]
    # Observable outputs at exit. Scalars: method-level int declarations plus
    # any assigned int parameter. Lists: list parameters plus method-level
    # local lists. Iterators are never outputs.
    output_scalars: tuple[str, ...]
    output_lists: tuple[str, ...]
    # Lists the body structurally mutates (directly or through an iterator);
    # verified in place. Fresh lists are method-level locals built from empty.
    mutated_lists: tuple[str, ...]
    fresh_lists: tuple[str, ...]
    loops: tuple[LoopInfo, ...]
    iter_sources: dict[str, str] = field(default_factory=dict)
    entry_heap: str = "h_i"
    exit_heap: str = "h_o"

    def var_type(self, name: str) -> Ty:
        for n, t in self.params + self.locals:
            if n == name:
                return t
        raise KeyError(name)

    def loop_by_id(self, loop_id: int) -> LoopInfo:
        for li in self.loops:
            if li.id == loop_id:
                return li
        raise KeyError(loop_id)


# --------------------------------------------------------------------------
# Heap-chain path enumeration
# --------------------------------------------------------------------------


def heap_chain_paths(p: IRProgram) -> list[list[str]]:
    """Enumerate heap-name chains along bounded paths.

    Branches fork the path set; loops are expanded zero times and once (enough
    to witness chain linearity per path). Every returned chain starts at the
    entry heap name and ends with the exit alias.
    """

    def walk(stmts: tuple[IRStmt, ...], chains: list[list[str]]) -> list[list[str]]:
        for s in stmts:
            if isinstance(s, MUTATORS):
                chains = [c + [s.h_out] for c in chains]
            elif isinstance(s, SIf):
                chains = walk(s.then, chains) + walk(s.els, chains)
            elif isinstance(s, SWhile):
                once = walk(s.body + s.update, chains)
                chains = chains + once
            elif isinstance(s, SReturn):
                break
        return chains

    return [c + [p.exit_heap] for c in walk(p.body, [[p.entry_heap]])]


# --------------------------------------------------------------------------
# Display
# --------------------------------------------------------------------------


def _fmt_iexpr(e: IExpr, h: str) -> str:
    match e:
        case IConst(value=v):
            return str(v)
        case IVar(name=n):
            return n
        case IUn(op=op, operand=x):
            return f"{op}({_fmt_iexpr(x, h)})"
        case IBin(op=op, left=l, right=r):
            return f"({_fmt_iexpr(l, h)} {op} {_fmt_iexpr(r, h)})"
        case IGet(list=l, index=i):
            return f"get({h}, {l}, {_fmt_iexpr(i, h)})"
        case ISize(list=l):
            return f"size({h}, {l})"
        case IHasNext(iter=it):
            return f"hasNext({h}, {it})"
    raise AssertionError(e)


def format_ir(p: IRProgram) -> str:
    """Readable listing with the heap chain threaded through mutators."""
    lines: list[str] = []
    cur = [p.entry_heap]

    def emit(stmts: tuple[IRStmt, ...], indent: int) -> None:
        pad = "  " * indent
        for s in stmts:
            h = cur[0]
            match s:
                case SAssign(name=n, expr=e):
                    lines.append(f"{pad}{n} = {_fmt_iexpr(e, h)}")
                case SEval(expr=e):
                    lines.append(f"{pad}eval {_fmt_iexpr(e, h)}")
                case SNewList(name=n, h_out=ho):
                    lines.append(f"{pad}{ho} = new({h}, {n})")
                case SAliasList(dst=d, src=sr, h_out=ho):
                    lines.append(f"{pad}{ho} = alias({h}, {d}, {sr})")
                case SIterInit(iter=it, list=l, h_out=ho):
                    lines.append(f"{pad}{ho} = iterator({h}, {it}, {l})")
                case SNext(dst=d, iter=it, h_out=ho):
                    target = f"{d}, " if d else ""
                    lines.append(f"{pad}{ho} = next({h}, {target}{it})")
                case SRemove(iter=it, h_out=ho):
                    lines.append(f"{pad}{ho} = remove({h}, {it})")
                case SAddLast(list=l, value=v, h_out=ho):
                    lines.append(f"{pad}{ho} = add_last({h}, {l}, {_fmt_iexpr(v, h)})")
                case SAddAt(list=l, index=i, value=v, h_out=ho):
                    lines.append(f"{pad}{ho} = add({h}, {l}, {_fmt_iexpr(i, h)}, {_fmt_iexpr(v, h)})")
                case SSet(list=l, index=i, value=v, h_out=ho):
                    lines.append(f"{pad}{ho} = set({h}, {l}, {_fmt_iexpr(i, h)}, {_fmt_iexpr(v, h)})")
                case SClear(list=l, h_out=ho):
                    lines.append(f"{pad}{ho} = clear({h}, {l})")
                case SIf(cond=c, then=t, els=e2):
                    lines.append(f"{pad}if {_fmt_iexpr(c, h)}:")
                    emit(t, indent + 1)
                    if e2:
                        lines.append(f"{pad}else:")
                        emit(e2, indent + 1)
                case SWhile(loop=li, cond=c, body=b, update=u):
                    cuts = ", ".join(f"{cr.kind}:{cr.var}@{cr.list}" for cr in li.cuts)
                    lines.append(f"{pad}while [loop{li.id} cuts: {cuts}] {_fmt_iexpr(c, h)}:")
                    emit(b, indent + 1)
                    if u:
                        lines.append(f"{pad}update:")
                        emit(u, indent + 1)
                case SBreak():
                    lines.append(f"{pad}break")
                case SContinue():
                    lines.append(f"{pad}continue")
                case SReturn():
                    lines.append(f"{pad}return")
            if isinstance(s, MUTATORS):
                cur[0] = s.h_out

    emit(p.body, 0)
    lines.append(f"{p.exit_heap} = {cur[0]}")
    return "\n".join(lines)
