"""Concrete big-step interpreter for the IR, with Java semantics.

State is kept in "identity" form: references name list identities, each
identity holds a value sequence. That is exactly the sharing a MiniJ program
can create (whole-list aliasing, never interior sharing), and it makes Java's
iterator bookkeeping direct: per-identity modification counts, per-iterator
expected counts, index-based cursors.

Faults are data, not Python exceptions: any Java-semantics fault (index out
of bounds, next() past the end, remove() before next(), structural
modification under a live iterator, division by zero) freezes the state and
sets `status`; so does running out of fuel. Arithmetic is 32-bit two's
complement, division truncates toward zero, remainder takes the dividend's
sign.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .heap import Heap
from .ir import (
    IBin, IConst, IExpr, IGet, IHasNext, IRProgram, ISize, IUn, IVar,
    SAddAt, SAddLast, SAliasList, SAssign, SBreak, SClear, SContinue, SEval,
    SIf, SIterInit, SNewList, SNext, SRemove, SReturn, SSet, SWhile,
)

OK = "ok"
E_INDEX = "exception:IndexOutOfBounds"
E_NOSUCH = "exception:NoSuchElement"
E_ILLEGAL = "exception:IllegalState"
E_CONCUR = "exception:ConcurrentModification"
E_ARITH = "exception:Arithmetic"
E_NULL = "exception:NullPointer"
OUT_OF_FUEL = "outoffuel"

DEFAULT_FUEL = 10_000

_MASK = 0xFFFFFFFF
_SIGN = 0x80000000


def wrap32(x: int) -> int:
    x &= _MASK
    return x - 0x100000000 if x & _SIGN else x


def jdiv(a: int, b: int) -> int:
    """Java int division: truncate toward zero; MIN_VALUE/-1 wraps."""
    q = abs(a) // abs(b)
    return wrap32(-q if (a < 0) != (b < 0) else q)


def jmod(a: int, b: int) -> int:
    """Java %: remainder with the dividend's sign."""
    return wrap32(a - jdiv(a, b) * b)


@dataclass
class IterState:
    lid: int
    cursor: int = 0
    last_ret: int = -1
    expected_mod: int = 0


class ProgramState:
    """Mutable during a run; snapshot with freeze()/canonical()."""

    __slots__ = ("scalars", "lists", "refs", "iters", "modcounts", "status",
                 "_next_lid")

    def __init__(self):
        self.scalars: dict[str, int] = {}
        self.lists: dict[int, list[int]] = {}
        self.refs: dict[str, Optional[int]] = {}
        self.iters: dict[str, IterState] = {}
        self.modcounts: dict[int, int] = {}
        self.status: str = OK
        self._next_lid: int = 0

    # -- construction --------------------------------------------------------

    @staticmethod
    def make(lists: dict[str, tuple[int, ...]],
             aliases: dict[str, str] | None = None,
             scalars: dict[str, int] | None = None) -> "ProgramState":
        st = ProgramState()
        for name, values in lists.items():
            st.new_list(name, values)
        for name, target in (aliases or {}).items():
            st.refs[name] = st.refs[target]
        st.scalars.update(scalars or {})
        return st

    def new_list(self, name: str, values: tuple[int, ...] = ()) -> int:
        lid = self._next_lid
        self._next_lid += 1
        self.lists[lid] = list(values)
        self.modcounts[lid] = 0
        self.refs[name] = lid
        return lid

    def clone(self) -> "ProgramState":
        st = ProgramState()
        st.scalars = dict(self.scalars)
        st.lists = {k: list(v) for k, v in self.lists.items()}
        st.refs = dict(self.refs)
        st.iters = {k: IterState(v.lid, v.cursor, v.last_ret, v.expected_mod)
                    for k, v in self.iters.items()}
        st.modcounts = dict(self.modcounts)
        st.status = self.status
        st._next_lid = self._next_lid
        return st

    # -- observation ---------------------------------------------------------

    def values(self, name: str) -> tuple[int, ...]:
        lid = self.refs[name]
        return tuple(self.lists[lid]) if lid is not None else ()

    def canonical(self, scalar_names, root_names) -> tuple:
        """Hashable observation: compared scalars, and per root its alias
        class (first root sharing the same identity) plus value sequence."""
        first_seen: dict[int, int] = {}
        roots = []
        for i, name in enumerate(root_names):
            lid = self.refs.get(name)
            if lid is None:
                roots.append((name, None, ()))
                continue
            cls = first_seen.setdefault(lid, i)
            roots.append((name, cls, tuple(self.lists[lid])))
        scal = tuple((n, self.scalars.get(n)) for n in scalar_names)
        return (self.status, scal, tuple(roots))

    def to_heap(self, root_names) -> Heap:
        """Lift to a graph heap (aliased roots share one chain)."""
        h = Heap.empty()
        heads: dict[int, Optional[int]] = {}
        for name in root_names:
            lid = self.refs.get(name)
            if lid is None:
                h = h.set_ref(name, None)
                continue
            if lid not in heads:
                h, head = h.alloc_chain(tuple(self.lists[lid]))
                heads[lid] = head
            h = h.set_ref(name, heads[lid])
        return h


@dataclass(frozen=True)
class EquivSpec:
    """What is observable when comparing two final states."""

    scalars: tuple[str, ...]
    roots: tuple[str, ...]


def equiv_spec_for(p: IRProgram) -> EquivSpec:
    return EquivSpec(scalars=p.output_scalars, roots=p.output_lists)


def state_equiv(s1: ProgramState, s2: ProgramState, spec: EquivSpec) -> bool:
    return (s1.canonical(spec.scalars, spec.roots)
            == s2.canonical(spec.scalars, spec.roots))


# --------------------------------------------------------------------------
# Execution
# --------------------------------------------------------------------------


class _Fault(Exception):
    def __init__(self, status: str):
        self.status = status


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


class _Return(Exception):
    pass


def run(p: IRProgram, pre: ProgramState, fuel: int = DEFAULT_FUEL,
        on_loop_head: Optional[Callable[[int, ProgramState], None]] = None,
        ) -> ProgramState:
    """Execute p from a copy of `pre`; the input state is never modified.

    `on_loop_head` is invoked at every arrival at a loop head (before the
    guard is evaluated), receiving the loop id and the live state — callers
    that keep it must clone.
    """
    st = pre.clone()
    eng = _Engine(st, fuel, on_loop_head)
    try:
        eng.seq(p.body)
    except _Return:
        pass
    except _Fault as f:
        st.status = f.status
    return st


class _Engine:
    def __init__(self, st: ProgramState, fuel: int, on_loop_head):
        self.st = st
        self.fuel = fuel
        self.on_loop_head = on_loop_head

    def tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise _Fault(OUT_OF_FUEL)

    # -- expressions ---------------------------------------------------------

    def eval(self, e: IExpr):
        match e:
            case IConst(value=v):
                return v
            case IVar(name=n):
                return self.st.scalars[n]
            case IUn(op=op, operand=x):
                v = self.eval(x)
                return (not v) if op == "!" else wrap32(-v)
            case IBin(op="&&", left=l, right=r):
                return self.eval(l) and self.eval(r)
            case IBin(op="||", left=l, right=r):
                return self.eval(l) or self.eval(r)
            case IBin(op=op, left=l, right=r):
                a = self.eval(l)
                b = self.eval(r)
                match op:
                    case "+":
                        return wrap32(a + b)
                    case "-":
                        return wrap32(a - b)
                    case "*":
                        return wrap32(a * b)
                    case "/":
                        if b == 0:
                            raise _Fault(E_ARITH)
                        return jdiv(a, b)
                    case "%":
                        if b == 0:
                            raise _Fault(E_ARITH)
                        return jmod(a, b)
                    case "<":
                        return a < b
                    case "<=":
                        return a <= b
                    case ">":
                        return a > b
                    case ">=":
                        return a >= b
                    case "==":
                        return a == b
                    case "!=":
                        return a != b
                raise AssertionError(op)
            case IGet(list=name, index=ie):
                lst = self._list(name)
                i = self.eval(ie)
                if not (0 <= i < len(lst)):
                    raise _Fault(E_INDEX)
                return lst[i]
            case ISize(list=name):
                return len(self._list(name))
            case IHasNext(iter=name):
                it = self.st.iters[name]
                return it.cursor != len(self.st.lists[it.lid])
        raise AssertionError(e)

    def _list(self, name: str) -> list[int]:
        lid = self.st.refs.get(name)
        if lid is None:
            raise _Fault(E_NULL)
        return self.st.lists[lid]

    def _lid(self, name: str) -> int:
        lid = self.st.refs.get(name)
        if lid is None:
            raise _Fault(E_NULL)
        return lid

    # -- statements ----------------------------------------------------------

    def seq(self, stmts) -> None:
        for s in stmts:
            self.step(s)

    def step(self, s) -> None:
        self.tick()
        st = self.st
        match s:
            case SAssign(name=n, expr=e):
                st.scalars[n] = self.eval(e)
            case SEval(expr=e):
                self.eval(e)
            case SNewList(name=n):
                st.new_list(n)
            case SAliasList(dst=d, src=r):
                st.refs[d] = self._lid(r)
            case SIterInit(iter=it, list=l):
                lid = self._lid(l)
                st.iters[it] = IterState(
                    lid=lid, cursor=0, last_ret=-1,
                    expected_mod=st.modcounts[lid])
            case SNext(dst=d, iter=itn):
                it = st.iters[itn]
                if it.expected_mod != st.modcounts[it.lid]:
                    raise _Fault(E_CONCUR)
                lst = st.lists[it.lid]
                if it.cursor >= len(lst):
                    raise _Fault(E_NOSUCH)
                v = lst[it.cursor]
                it.last_ret = it.cursor
                it.cursor += 1
                if d is not None:
                    st.scalars[d] = v
            case SRemove(iter=itn):
                it = st.iters[itn]
                if it.expected_mod != st.modcounts[it.lid]:
                    raise _Fault(E_CONCUR)
                if it.last_ret < 0:
                    raise _Fault(E_ILLEGAL)
                del st.lists[it.lid][it.last_ret]
                st.modcounts[it.lid] += 1
                it.expected_mod = st.modcounts[it.lid]
                it.cursor = it.last_ret
                it.last_ret = -1
            case SAddLast(list=l, value=ve):
                v = self.eval(ve)
                lid = self._lid(l)
                st.lists[lid].append(v)
                st.modcounts[lid] += 1
            case SAddAt(list=l, index=ie, value=ve):
                i = self.eval(ie)
                v = self.eval(ve)
                lid = self._lid(l)
                lst = st.lists[lid]
                if not (0 <= i <= len(lst)):
                    raise _Fault(E_INDEX)
                lst.insert(i, v)
                st.modcounts[lid] += 1
            case SSet(list=l, index=ie, value=ve):
                i = self.eval(ie)
                v = self.eval(ve)
                lst = self._list(l)
                if not (0 <= i < len(lst)):
                    raise _Fault(E_INDEX)
                lst[i] = v  # not structural: iterators stay valid
            case SClear(list=l):
                lid = self._lid(l)
                st.lists[lid].clear()
                st.modcounts[lid] += 1
            case SIf(cond=c, then=t, els=e):
                if self.eval(c):
                    self.seq(t)
                else:
                    self.seq(e)
            case SWhile(loop=li, cond=c, body=b, update=u):
                while True:
                    if self.on_loop_head is not None:
                        self.on_loop_head(li.id, st)
                    self.tick()
                    if not self.eval(c):
                        break
                    try:
                        self.seq(b)
                    except _Break:
                        break
                    except _Continue:
                        pass
                    self.seq(u)
            case SBreak():
                raise _Break()
            case SContinue():
                raise _Continue()
            case SReturn():
                raise _Return()
            case _:
                raise AssertionError(s)
