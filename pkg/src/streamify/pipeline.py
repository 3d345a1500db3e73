"""Pipeline terms: chained stream stages with one designated result.

A term reads one source list and either produces a list (stages only) or a
scalar (stages plus a terminal). Three degenerate forms cover outputs that
need no traversal: `<unchanged>` (an in-place target the candidate leaves
alone), `<new>` (a fresh empty list), and `<const k>` (a scalar constant,
used for the seed candidate). Term length counts stages and real terminals
only, so minimality is about semantic operators, not plumbing.

Terms evaluate two ways, kept in agreement by tests: over a graph heap by
chaining the segment operators (the authoritative semantics, faithful to the
sharing behavior of the rules), and directly over value tuples (what the
search and bulk verification use).

The textual form is line-oriented, one pipeline per output:

    list.stream().filter(v -> v > 0).map(v -> 2 * v) => newList
    l.stream().reduce(0, (a, b) -> a + b) => sum
    p.stream().skip(l.size()) => p
    <unchanged> => p
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .errors import NoSourceSegment, PipelineParseError
from .heap import Heap
from .jst import (
    Acc, CmpAtom, Const, Mapper, ModAtom, N_INF, P_INF, Pred, SizeRef,
    op_filter, op_limit, op_map, op_reduce, op_skip, op_sorted, resolve,
)
from .interp import wrap32


# --------------------------------------------------------------------------
# Stages and terminals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StFilter:
    pred: Pred

    def __str__(self) -> str:
        return f".filter(v -> {self.pred})"


@dataclass(frozen=True)
class StMap:
    mapper: Mapper

    def __str__(self) -> str:
        return f".map(v -> {self.mapper})"


@dataclass(frozen=True)
class StSkip:
    n: Const

    def __str__(self) -> str:
        return f".skip({self.n})"


@dataclass(frozen=True)
class StLimit:
    n: Const

    def __str__(self) -> str:
        return f".limit({self.n})"


@dataclass(frozen=True)
class StSorted:
    def __str__(self) -> str:
        return ".sorted()"


Stage = Union[StFilter, StMap, StSkip, StLimit, StSorted]


@dataclass(frozen=True)
class TmReduce:
    v0: int
    acc: Acc

    def __str__(self) -> str:
        return f".reduce({self.v0}, {self.acc})"


@dataclass(frozen=True)
class TmMin:
    def __str__(self) -> str:
        return ".min()"


@dataclass(frozen=True)
class TmMax:
    def __str__(self) -> str:
        return ".max()"


@dataclass(frozen=True)
class TmExists:
    pred: Pred

    def __str__(self) -> str:
        return f".anyMatch(v -> {self.pred})"


@dataclass(frozen=True)
class TmForall:
    pred: Pred

    def __str__(self) -> str:
        return f".allMatch(v -> {self.pred})"


@dataclass(frozen=True)
class TmConst:
    """Seed-only scalar constant; not part of the search grammar."""

    value: int


Terminal = Union[TmReduce, TmMin, TmMax, TmExists, TmForall, TmConst]


# --------------------------------------------------------------------------
# Terms
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineTerm:
    target: str
    source: Optional[str]
    stages: tuple[Stage, ...] = ()
    terminal: Optional[Terminal] = None
    # Segment end for the first stage (an iterator/cut reference name). Set
    # by cut_at_iterator; None means the whole source list.
    source_end: Optional[str] = None
    unchanged: bool = False

    @property
    def length(self) -> int:
        n = len(self.stages)
        if self.terminal is not None and not isinstance(self.terminal, TmConst):
            n += 1
        return n

    def is_scalar(self) -> bool:
        return self.terminal is not None

    def __str__(self) -> str:
        if self.unchanged:
            return f"<unchanged> => {self.target}"
        if self.source is None:
            if isinstance(self.terminal, TmConst):
                return f"<const {self.terminal.value}> => {self.target}"
            return f"<new> => {self.target}"
        cut = f"[..{self.source_end}]" if self.source_end else ""
        body = "".join(str(s) for s in self.stages)
        tail = str(self.terminal) if self.terminal is not None else ""
        return f"{self.source}.stream(){cut}{body}{tail} => {self.target}"


def identity_term(target: str) -> PipelineTerm:
    return PipelineTerm(target=target, source=None, unchanged=True)


def new_empty_term(target: str) -> PipelineTerm:
    return PipelineTerm(target=target, source=None)


def const_term(target: str, value: int) -> PipelineTerm:
    return PipelineTerm(target=target, source=None, terminal=TmConst(value))


def cut_at_iterator(t: PipelineTerm, cut_ref: str) -> PipelineTerm:
    """Restrict the term's source segment to end at `cut_ref`.

    Later stages still consume their whole intermediate list; only the first
    read of the source is partial.
    """
    if t.source is None:
        if t.unchanged or isinstance(t.terminal, TmConst):
            return t  # nothing to cut
        raise NoSourceSegment(f"term for '{t.target}' has no source segment")
    return replace(t, source_end=cut_ref)


# --------------------------------------------------------------------------
# Value-level evaluation
# --------------------------------------------------------------------------


def eval_stages_values(stages: tuple[Stage, ...], vals: tuple[int, ...],
                       env: dict) -> tuple[int, ...]:
    for s in stages:
        match s:
            case StFilter(pred=p):
                vals = tuple(v for v in vals if p.test(v))
            case StMap(mapper=m):
                vals = tuple(m.apply(v, env) for v in vals)
            case StSkip(n=n):
                k = resolve(n, env)
                vals = vals[k:] if k >= 0 else vals
            case StLimit(n=n):
                k = resolve(n, env)
                vals = vals[:k] if k >= 0 else vals
            case StSorted():
                vals = tuple(sorted(vals))
    return vals


def eval_terminal_values(t: Terminal, vals: tuple[int, ...], env: dict) -> int:
    match t:
        case TmReduce(v0=v0, acc=acc):
            out = v0
            for v in vals:
                out = acc.apply(out, v)
            return out
        case TmMin():
            return min(vals) if vals else P_INF
        case TmMax():
            return max(vals) if vals else N_INF
        case TmExists(pred=p):
            return int(any(p.test(v) for v in vals))
        case TmForall(pred=p):
            return int(all(p.test(v) for v in vals))
        case TmConst(value=v):
            return v
    raise AssertionError(t)


def eval_term_values(t: PipelineTerm, source_vals: tuple[int, ...],
                     env: dict) -> Union[int, tuple[int, ...]]:
    """Evaluate over plain values. For cut terms the caller passes the
    already-sliced prefix as source_vals."""
    vals = eval_stages_values(t.stages, source_vals, env)
    if t.terminal is not None:
        return eval_terminal_values(t.terminal, vals, env)
    return vals


# --------------------------------------------------------------------------
# Graph-level evaluation
# --------------------------------------------------------------------------


def eval_pipeline(t: PipelineTerm, h: Heap, env: dict | None = None
                  ) -> tuple[Heap, Union[int, str, None]]:
    """Authoritative evaluation: chain segment operators through the heap.

    Returns (heap', result): the fresh result list's reference name for list
    terms, the scalar value for scalar terms, None for <unchanged>.
    """
    env = env or {}
    if t.unchanged:
        return h, None
    if t.source is None:
        if isinstance(t.terminal, TmConst):
            return h, t.terminal.value
        ret = f"$ret_{t.target}"
        h2, head = h.alloc_chain(())
        return h2.set_ref(ret, head), ret

    cur = t.source
    end = t.source_end
    for i, s in enumerate(t.stages):
        ret = f"$s{i}_{t.target}"
        match s:
            case StFilter(pred=p):
                h = op_filter(h, cur, end, p, ret)
            case StMap(mapper=m):
                h = op_map(h, cur, end, m, ret, env)
            case StSkip(n=n):
                h = op_skip(h, cur, end, 0, resolve(n, env), ret)
            case StLimit(n=n):
                h = op_limit(h, cur, end, resolve(n, env), ret)
            case StSorted():
                h = op_sorted(h, cur, end, ret)
        cur, end = ret, None

    if t.terminal is None:
        if cur == t.source:  # no stages: materialize a copy
            ret = f"$ret_{t.target}"
            h = h.set_ref(ret, h.ref(cur))
            cur = ret
        return h, cur

    vals = h.values_from(h.ref(cur), None if end is None else h.ref(end))
    match t.terminal:
        case TmReduce(v0=v0, acc=acc):
            out = v0
            for v in vals:
                out = acc.apply(out, v)
        case TmMin():
            out = min(vals) if vals else P_INF
        case TmMax():
            out = max(vals) if vals else N_INF
        case TmExists(pred=p):
            out = int(any(p.test(v) for v in vals))
        case TmForall(pred=p):
            out = int(all(p.test(v) for v in vals))
        case TmConst(value=v0):
            out = v0
    return h, out


# --------------------------------------------------------------------------
# Textual form
# --------------------------------------------------------------------------

_INT = r"-?\d+"
_SIZE = r"[A-Za-z_$][A-Za-z0-9_$]*\.size\(\)"


def _parse_const(text: str, line: int) -> Const:
    text = text.strip()
    if re.fullmatch(_INT, text):
        return int(text)
    m = re.fullmatch(r"([A-Za-z_$][A-Za-z0-9_$]*)\.size\(\)", text)
    if m:
        return SizeRef(m.group(1))
    raise PipelineParseError(f"expected integer or <list>.size(), got '{text}'", line)


def _parse_pred(text: str, line: int) -> Pred:
    body = text.strip()
    m = re.fullmatch(r"v\s*->\s*(.+)", body)
    if not m:
        raise PipelineParseError(f"expected 'v -> ...', got '{body}'", line)
    atoms: list = []
    for part in re.split(r"\s*&&\s*", m.group(1)):
        part = part.strip()
        mm = re.fullmatch(rf"v\s*%\s*(\d+)\s*==\s*({_INT})", part)
        if mm:
            atoms.append(ModAtom(int(mm.group(1)), int(mm.group(2))))
            continue
        mm = re.fullmatch(rf"v\s*(==|!=|<=|>=|<|>)\s*({_INT})", part)
        if mm:
            atoms.append(CmpAtom(mm.group(1), int(mm.group(2))))
            continue
        raise PipelineParseError(f"cannot parse predicate atom '{part}'", line)
    if not 1 <= len(atoms) <= 2:
        raise PipelineParseError("predicates take 1 or 2 atoms", line)
    return Pred(tuple(atoms))


def _parse_mapper(text: str, line: int) -> Mapper:
    body = text.strip()
    m = re.fullmatch(r"v\s*->\s*(.+)", body)
    if not m:
        raise PipelineParseError(f"expected 'v -> ...', got '{body}'", line)
    expr = m.group(1).replace(" ", "")
    mm = re.fullmatch(rf"(?:({_INT})\*)?(-?)v(?:([+-])(\d+|{_SIZE}))?", expr)
    if mm:
        a = int(mm.group(1)) if mm.group(1) else 1
        if mm.group(2) == "-":
            a = -a
        b: Const = 0
        if mm.group(3):
            b = _parse_const(mm.group(4), line)
            if mm.group(3) == "-":
                if isinstance(b, SizeRef):
                    raise PipelineParseError("cannot negate a size constant", line)
                b = -b
        return Mapper(a, b)
    # constant mapper: no v at all
    try:
        return Mapper(0, _parse_const(expr, line))
    except PipelineParseError:
        raise PipelineParseError(f"cannot parse mapper '{body}'", line)


def _parse_acc(text: str, line: int) -> Acc:
    t = text.strip()
    if t in ("Math::min", "Integer::min"):
        return Acc("min")
    if t in ("Math::max", "Integer::max"):
        return Acc("max")
    m = re.fullmatch(r"\(\s*a\s*,\s*b\s*\)\s*->\s*a\s*([+*])\s*b", t)
    if m:
        return Acc(m.group(1))
    raise PipelineParseError(f"cannot parse accumulator '{t}'", line)


def _split_calls(chain: str, line: int) -> list[tuple[str, str]]:
    """Split '.f(args).g(args)' into [(f, args), (g, args)] (paren-aware)."""
    out: list[tuple[str, str]] = []
    i = 0
    n = len(chain)
    while i < n:
        if chain[i] != ".":
            raise PipelineParseError(f"expected '.' in pipeline at '{chain[i:]}'", line)
        j = chain.index("(", i)
        name = chain[i + 1:j]
        depth = 1
        k = j + 1
        while k < n and depth:
            if chain[k] == "(":
                depth += 1
            elif chain[k] == ")":
                depth -= 1
            k += 1
        if depth:
            raise PipelineParseError("unbalanced parentheses in pipeline", line)
        out.append((name.strip(), chain[j + 1:k - 1]))
        i = k
    return out


def parse_pipeline(text: str, line: int = 1) -> PipelineTerm:
    """Parse one line of the textual form."""
    if "=>" not in text:
        raise PipelineParseError("missing '=> target'", line)
    left, target = text.rsplit("=>", 1)
    target = target.strip()
    left = left.strip()
    if not target:
        raise PipelineParseError("empty target", line)
    if left == "<unchanged>":
        return identity_term(target)
    if left == "<new>":
        return new_empty_term(target)
    m = re.fullmatch(rf"<const\s+({_INT})>", left)
    if m:
        return const_term(target, int(m.group(1)))

    m = re.match(r"([A-Za-z_$][A-Za-z0-9_$]*)\.stream\(\)", left)
    if not m:
        raise PipelineParseError(f"expected '<source>.stream()', got '{left}'", line)
    source = m.group(1)
    calls = _split_calls(left[m.end():], line)

    stages: list[Stage] = []
    terminal: Optional[Terminal] = None
    for name, args in calls:
        if terminal is not None:
            raise PipelineParseError(f"stage after terminal '{name}'", line)
        match name:
            case "filter":
                stages.append(StFilter(_parse_pred(args, line)))
            case "map":
                stages.append(StMap(_parse_mapper(args, line)))
            case "skip":
                stages.append(StSkip(_parse_const(args, line)))
            case "limit":
                stages.append(StLimit(_parse_const(args, line)))
            case "sorted":
                if args.strip():
                    raise PipelineParseError("sorted() takes no arguments", line)
                stages.append(StSorted())
            case "reduce":
                depth = 0
                split_at = -1
                for i, ch in enumerate(args):
                    if ch == "(":
                        depth += 1
                    elif ch == ")":
                        depth -= 1
                    elif ch == "," and depth == 0:
                        split_at = i
                        break
                if split_at < 0:
                    raise PipelineParseError("reduce takes (identity, accumulator)", line)
                v0 = _parse_const(args[:split_at], line)
                if isinstance(v0, SizeRef):
                    raise PipelineParseError("reduce identity must be an integer", line)
                terminal = TmReduce(v0, _parse_acc(args[split_at + 1:], line))
            case "min":
                terminal = TmMin()
            case "max":
                terminal = TmMax()
            case "anyMatch":
                terminal = TmExists(_parse_pred(args, line))
            case "allMatch":
                terminal = TmForall(_parse_pred(args, line))
            case _:
                raise PipelineParseError(f"unknown pipeline operator '{name}'", line)
    return PipelineTerm(target=target, source=source, stages=tuple(stages),
                        terminal=terminal)
