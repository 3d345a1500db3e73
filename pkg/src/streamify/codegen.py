"""Java 8 stream text for verified candidates, plus a syntactic baseline.

Emission is a straight rendering of the pipeline notation: stages and
terminals already print as Java stream calls, so the work here is the
surrounding statement forms and their ordering.

Fresh-list targets become collect(Collectors.toList()) declarations and
scalar targets become int declarations (plain assignments when the target
is a method parameter). A target rewritten in place keeps its identity so
every alias observes the update: the emitted code snapshots the list,
clears it through the original reference, and re-adds the staged elements
with forEachOrdered(target::add). The target variable itself is never
rebound.

Ordering: scalar and fresh-list lines come first, then all in-place
snapshots, then the clear/re-add pairs. Every pipeline therefore reads
pre-state values no matter which lists the candidate rewrites; size
references to a rewritten list are redirected to its snapshot, which holds
the pre-state elements.

`parse_emitted` reads the emitted method back into a candidate so tests can
re-verify the text itself rather than trust the printer.

`emit_pattern_baseline` is the comparison point: a purely syntactic
rewriter that recognizes three fixed loop shapes and nothing else. It does
no semantic reasoning; near-miss variants of the same computation are
deliberately left unmatched.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Optional

from .errors import UntranslatableOp
from .ir import IRProgram
from .jst import SizeRef
from .pipeline import (
    PipelineTerm,
    StFilter,
    StLimit,
    StMap,
    StSkip,
    StSorted,
    TmConst,
    TmExists,
    TmForall,
    TmMax,
    TmMin,
    TmReduce,
    parse_pipeline,
)
from .syntax import (
    Assign,
    Binary,
    Block,
    Call,
    CallStmt,
    Decl,
    Expr,
    For,
    If,
    IntLit,
    MiniJProgram,
    NewList,
    Stmt,
    Ty,
    Var,
    While,
    _fmt_expr,
)
from .vcgen import Candidate

logger = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# Emission plan
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EmitRecord:
    """One output's statements, in final order."""

    target: str
    lines: tuple[str, ...]
    in_place: bool


@dataclass(frozen=True)
class EmitPlan:
    records: tuple[EmitRecord, ...]
    imports: tuple[str, ...]


def _is_in_place(t: PipelineTerm) -> bool:
    return t.source is not None and t.source == t.target and not t.is_scalar()


def _fresh_name(base: str, used: set[str]) -> str:
    if base not in used:
        used.add(base)
        return base
    n = 2
    while f"{base}{n}" in used:
        n += 1
    used.add(f"{base}{n}")
    return f"{base}{n}"


def _redirect_sizes(text: str, renames: dict[str, str]) -> str:
    # boundary-anchored so e.g. al.size() survives an l -> copy redirect
    for orig, repl in renames.items():
        text = re.sub(rf"(?<![A-Za-z0-9_]){re.escape(orig)}\.size\(\)",
                      f"{repl}.size()", text)
    return text


def _stage_chain(t: PipelineTerm, renames: dict[str, str]) -> str:
    parts = []
    for s in t.stages:
        if not isinstance(s, (StFilter, StMap, StSkip, StLimit, StSorted)):
            raise UntranslatableOp(f"no Java stream rendering for stage {s!r}")
        parts.append(_redirect_sizes(str(s), renames))
    return "".join(parts)


def _scalar_chain(t: PipelineTerm, renames: dict[str, str]) -> str:
    """Stream chain text for a scalar term, findFirst form included.

    filter(p).limit(1).reduce(0, +) is exactly first-match-or-zero, so it
    re-sugars to .findFirst().orElse(0); the reduce identity must be 0 or
    the fold over a singleton would add it in.
    """
    stages = t.stages
    term = t.terminal
    tail: str
    match term:
        case TmReduce(v0=v0, acc=acc):
            if v0 == 0 and acc.op == "+" and stages and stages[-1] == StLimit(1):
                stages = stages[:-1]
                tail = ".findFirst().orElse(0)"
            else:
                tail = str(term)
        case TmMin():
            tail = ".min(Integer::compare).get()"
        case TmMax():
            tail = ".max(Integer::compare).get()"
        case TmExists(pred=p):
            tail = f".anyMatch(v -> {p}) ? 1 : 0"
        case TmForall(pred=p):
            tail = f".allMatch(v -> {p}) ? 1 : 0"
        case _:
            raise UntranslatableOp(f"no Java rendering for terminal {term!r}")
    body = "".join(_redirect_sizes(str(s), renames) for s in stages)
    return f"{t.source}.stream(){body}{tail}"


def plan_emission(c: Candidate, p: IRProgram) -> EmitPlan:
    """Order and render the candidate's terms as Java statements."""
    param_names = {n for n, _ in p.params}
    used = set(param_names) | {n for n, _ in p.locals} | {t.target for t in c.terms}

    in_place = [t for t in c.terms if _is_in_place(t)]
    snapshots = {t.target: _fresh_name("copy", used) for t in in_place}

    records: list[EmitRecord] = []
    for t in c.terms:
        if t.unchanged or _is_in_place(t):
            continue
        if t.is_scalar():
            decl = "" if t.target in param_names else "int "
            if isinstance(t.terminal, TmConst):
                rhs = str(t.terminal.value)
            else:
                rhs = _scalar_chain(t, snapshots)
            records.append(EmitRecord(t.target, (f"{decl}{t.target} = {rhs};",), False))
        elif t.source is None:
            line = f"List<Integer> {t.target} = new ArrayList<>();"
            records.append(EmitRecord(t.target, (line,), False))
        else:
            chain = _stage_chain(t, snapshots)
            line = (f"List<Integer> {t.target} = {t.source}.stream()"
                    f"{chain}.collect(Collectors.toList());")
            records.append(EmitRecord(t.target, (line,), False))

    # Snapshots first so later clears cannot destroy a pre-state read.
    for t in in_place:
        snap = snapshots[t.target]
        records.append(EmitRecord(
            t.target, (f"ArrayList<Integer> {snap} = new ArrayList<>({t.target});",),
            True))
    for t in in_place:
        snap = snapshots[t.target]
        chain = _stage_chain(t, snapshots)
        records.append(EmitRecord(
            t.target,
            (f"{t.target}.clear();",
             f"{snap}.stream(){chain}.forEachOrdered({t.target}::add);"),
            True))

    text = "\n".join(line for r in records for line in r.lines)
    imports = ["java.util.List"]
    if "new ArrayList" in text:
        imports.append("java.util.ArrayList")
    if "Collectors." in text:
        imports.append("java.util.stream.Collectors")
    return EmitPlan(tuple(records), tuple(sorted(imports)))


def _method_text(name: str, params: tuple[tuple[str, Ty], ...],
                 imports: tuple[str, ...], body_lines: list[str]) -> str:
    lines = [f"// requires: import {imp};" for imp in imports]
    sig = ", ".join(f"{ty.value} {n}" for n, ty in params)
    lines.append(f"void {name}({sig}) {{")
    lines.extend(f"  {b}" for b in body_lines)
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit(c: Candidate, p: IRProgram) -> str:
    """Render a verified candidate as a replacement method body."""
    plan = plan_emission(c, p)
    body = [line for r in plan.records for line in r.lines]
    return _method_text(p.name, p.params, plan.imports, body)


# --------------------------------------------------------------------------
# Reading emitted text back
# --------------------------------------------------------------------------

_RE_SNAPSHOT = re.compile(r"^ArrayList<Integer> (\w+) = new ArrayList<>\((\w+)\);$")
_RE_CLEAR = re.compile(r"^(\w+)\.clear\(\);$")
_RE_READD = re.compile(r"^(\w+)(\.stream\(\).*)\.forEachOrdered\((\w+)::add\);$")
_RE_NEW = re.compile(r"^List<Integer> (\w+) = new ArrayList<>\(\);$")
_RE_COLLECT = re.compile(
    r"^List<Integer> (\w+) = (\w+)(\.stream\(\).*)\.collect\(Collectors\.toList\(\)\);$")
_RE_CONST = re.compile(r"^(?:int )?(\w+) = (-?\d+);$")
_RE_SCALAR = re.compile(r"^(?:int )?(\w+) = (\w+)(\.stream\(\).*?);$")

_FIND_FIRST = ".findFirst().orElse(0)"
_TERNARY = " ? 1 : 0"


def parse_emitted(text: str, p: IRProgram) -> Candidate:
    """Reconstruct the candidate an emitted method denotes.

    Inverse of `emit` up to the unchanged terms, which emit no code. Used
    by tests to re-verify the printed Java instead of the in-memory
    candidate it came from.
    """
    snapshots: dict[str, str] = {}
    terms: list[PipelineTerm] = []
    for raw in text.splitlines():
        line = raw.strip()
        if (not line or line.startswith("//") or line.startswith("void ")
                or line == "}"):
            continue
        if m := _RE_SNAPSHOT.match(line):
            snapshots[m.group(1)] = m.group(2)
            continue
        if _RE_CLEAR.match(line):
            continue
        if m := _RE_READD.match(line):
            recv, chain, target = m.groups()
            src = snapshots.get(recv, recv)
            chain = _redirect_sizes(chain, snapshots)
            terms.append(parse_pipeline(f"{src}{chain} => {target}"))
            continue
        if m := _RE_NEW.match(line):
            terms.append(parse_pipeline(f"<new> => {m.group(1)}"))
            continue
        if m := _RE_COLLECT.match(line):
            target, src, chain = m.groups()
            terms.append(parse_pipeline(f"{src}{chain} => {target}"))
            continue
        if m := _RE_CONST.match(line):
            terms.append(parse_pipeline(f"<const {m.group(2)}> => {m.group(1)}"))
            continue
        if m := _RE_SCALAR.match(line):
            target, src, chain = m.groups()
            if chain.endswith(_TERNARY):
                chain = chain[:-len(_TERNARY)]
            if chain.endswith(_FIND_FIRST):
                chain = chain[:-len(_FIND_FIRST)]
                chain += ".limit(1).reduce(0, (a, b) -> a + b)"
            chain = chain.replace(".min(Integer::compare).get()", ".min()")
            chain = chain.replace(".max(Integer::compare).get()", ".max()")
            terms.append(parse_pipeline(f"{src}{chain} => {target}"))
            continue
        raise UntranslatableOp(f"unrecognized emitted line: {line!r}")
    return Candidate(tuple(terms))


# --------------------------------------------------------------------------
# Pattern baseline
# --------------------------------------------------------------------------


def _expr_names(e: Expr, acc: set[str]) -> None:
    match e:
        case Var(name=n):
            acc.add(n)
        case Binary(left=a, right=b):
            _expr_names(a, acc)
            _expr_names(b, acc)
        case Call(recv=r, args=args):
            acc.add(r)
            for a in args:
                _expr_names(a, acc)


def _only_names(e: Expr, allowed: set[str]) -> bool:
    acc: set[str] = set()
    _expr_names(e, acc)
    return acc <= allowed


def _match_add_body(stmts: tuple[Stmt, ...], v: str,
                    dst: str) -> Optional[tuple[Optional[Expr], Expr]]:
    """Match `if (P) { dst.add(E); }` or bare `dst.add(E);` over var v."""
    cond: Optional[Expr] = None
    match stmts:
        case (If(cond=c, then=Block(stmts=(CallStmt(call=add),)), els=None),):
            cond = c
        case (CallStmt(call=add),):
            pass
        case _:
            return None
    if not (isinstance(add, Call) and add.recv == dst and add.method == "add"
            and len(add.args) == 1):
        return None
    if cond is not None and not _only_names(cond, {v}):
        return None
    if not _only_names(add.args[0], {v}):
        return None
    return cond, add.args[0]


def _pipeline_text(src: str, dst: str, v: str, cond: Optional[Expr],
                   elem: Expr) -> str:
    chain = f"{src}.stream()"
    if cond is not None:
        chain += f".filter({v} -> {_fmt_expr(cond)})"
    if elem != Var(v):
        chain += f".map({v} -> {_fmt_expr(elem)})"
    return f"List<Integer> {dst} = {chain}.collect(Collectors.toList());"


def _match_indexed_for(body: tuple[Stmt, ...]) -> Optional[str]:
    match body:
        case (Decl(ty=Ty.LIST, name=dst, init=NewList()),
              For(init=Decl(ty=Ty.INT, name=i, init=IntLit(value=0)),
                  cond=Binary(op="<", left=Var(name=i2),
                              right=Call(recv=src, method="size", args=())),
                  update=Assign(name=i3,
                                expr=Binary(op="+", left=Var(name=i4),
                                            right=IntLit(value=1))),
                  body=Block(stmts=(
                      Decl(ty=Ty.INT, name=v,
                           init=Call(recv=src2, method="get",
                                     args=(Var(name=i5),))),
                      *rest)))) if i == i2 == i3 == i4 == i5 and src == src2:
            matched = _match_add_body(tuple(rest), v, dst)
            if matched is None:
                return None
            cond, elem = matched
            return _pipeline_text(src, dst, v, cond, elem)
    return None


def _match_iterator_while(body: tuple[Stmt, ...]) -> Optional[str]:
    match body:
        case (Decl(ty=Ty.LIST, name=dst, init=NewList()),
              Decl(ty=Ty.ITER, name=it,
                   init=Call(recv=src, method="iterator", args=())),
              While(cond=Call(recv=it2, method="hasNext", args=()),
                    body=Block(stmts=(
                        Decl(ty=Ty.INT, name=v,
                             init=Call(recv=it3, method="next", args=())),
                        *rest)))) if it == it2 == it3:
            matched = _match_add_body(tuple(rest), v, dst)
            if matched is None:
                return None
            cond, elem = matched
            return _pipeline_text(src, dst, v, cond, elem)
    return None


def _match_iterator_remove(body: tuple[Stmt, ...]) -> Optional[list[str]]:
    match body:
        case (Decl(ty=Ty.ITER, name=it,
                   init=Call(recv=src, method="iterator", args=())),
              While(cond=Call(recv=it2, method="hasNext", args=()),
                    body=Block(stmts=(
                        Decl(ty=Ty.INT, name=v,
                             init=Call(recv=it3, method="next", args=())),
                        If(cond=c,
                           then=Block(stmts=(CallStmt(
                               call=Call(recv=it4, method="remove",
                                         args=())),)),
                           els=None))))) if it == it2 == it3 == it4:
            if not _only_names(c, {v}):
                return None
            # Keep removal as retention with a textually negated test.
            return [
                f"ArrayList<Integer> copy = new ArrayList<>({src});",
                f"{src}.clear();",
                f"copy.stream().filter({v} -> !({_fmt_expr(c)}))"
                f".forEachOrdered({src}::add);",
            ]
    return None


def emit_pattern_baseline(prog: MiniJProgram) -> Optional[str]:
    """Rewrite one of three fixed loop shapes; None on any other input.

    The templates are matched structurally against the whole method body:
    an indexed for loop filtering and mapping into a fresh list, the same
    shape phrased with an explicit iterator, and an iterator loop that
    removes matching elements. Anything else, including semantically
    identical rephrasings, is not matched.
    """
    body = prog.body.stmts
    lines: Optional[list[str]] = None
    if (text := _match_indexed_for(body)) is not None:
        lines = [text]
    elif (text := _match_iterator_while(body)) is not None:
        lines = [text]
    else:
        lines = _match_iterator_remove(body)
    if lines is None:
        logger.debug("no baseline template matches %s", prog.name)
        return None
    joined = "\n".join(lines)
    imports = ["java.util.List"]
    if "new ArrayList" in joined:
        imports.append("java.util.ArrayList")
    if "Collectors." in joined:
        imports.append("java.util.stream.Collectors")
    return _method_text(prog.name, prog.params, tuple(sorted(imports)), lines)
