"""Verification conditions and bounded exhaustive checking.

A candidate assigns one pipeline term to each program output. Verification
asks: does the candidate agree with the original program on every pre-state
in the bounded universe? Two checkers answer it:

  * check_end_to_end — compiled original vs compiled candidate, final states
    only. This is the fast path the synthesizer races.
  * check_vcs       — Hoare-style: per loop a Base, Inductive and Exit
    condition over loop-head states realized by concrete execution. Loop
    invariants are not searched; they are the candidate's own terms cut at
    the loop's progress point (iterator consumed count or index variable).

Both report the first failing pre-state, in enumeration order, as a
Counterexample carrying a constructor sequence plus expected/actual
snapshots. A fault in the original program on any pre-state makes the
program not refactorable (pipelines cannot reproduce faults).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from time import monotonic as _now
from typing import Callable, Optional

from .errors import NotRefactorableError, ShapeMismatch, TimeoutExceeded
from .fastexec import (compile_candidate, compile_ir, compile_term,
                       compile_verifier)
from .interp import OK, ProgramState, run
from .ir import (CutRef, IRProgram, LoopInfo, SAssign, SIf, SNext, SWhile)
from .pipeline import (PipelineTerm, StSorted, TmConst, cut_at_iterator,
                       parse_pipeline)
from .syntax import Ty
from .universe import Bounds, enumerate_param_vectors, param_domains


# --------------------------------------------------------------------------
# Candidates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    """One pipeline term per output, keyed by target name."""

    terms: tuple[PipelineTerm, ...]

    def post_terms(self) -> dict[str, PipelineTerm]:
        return {t.target: t for t in self.terms}

    def term_for(self, target: str) -> Optional[PipelineTerm]:
        for t in self.terms:
            if t.target == target:
                return t
        return None

    @property
    def total_length(self) -> int:
        return sum(t.length for t in self.terms)

    def inv_terms(self, p: IRProgram) -> dict[int, tuple[PipelineTerm, ...]]:
        """Derived loop invariants: each term cut at the loop's own progress
        reference for the term's source. Nested loops inherit the nearest
        top-level ancestor's invariant, so only top-level loops appear."""
        out: dict[int, tuple[PipelineTerm, ...]] = {}
        for li in p.loops:
            if li.parent is not None:
                continue
            cut_by_list = {c.list: c for c in li.cuts}
            terms = []
            for t in self.terms:
                if t.source is None:
                    terms.append(t)  # nothing to cut; holds whole
                elif t.source in cut_by_list:
                    terms.append(cut_at_iterator(t, cut_by_list[t.source].var))
            out[li.id] = tuple(terms)
        return out

    def __str__(self) -> str:
        return "\n".join(str(t) for t in self.terms)

    @staticmethod
    def parse(text: str) -> "Candidate":
        terms = []
        for i, line in enumerate(text.splitlines(), start=1):
            if line.strip():
                terms.append(parse_pipeline(line, line=i))
        return Candidate(terms=tuple(terms))


def assigned_scalars(p: IRProgram) -> tuple[str, ...]:
    """Output scalars the body actually writes; these need terms."""
    hit: set[str] = set()

    def scan(stmts) -> None:
        for s in stmts:
            match s:
                case SAssign(name=n):
                    hit.add(n)
                case SNext(dst=d) if d is not None:
                    hit.add(d)
                case SIf(then=a, els=b):
                    scan(a)
                    scan(b)
                case SWhile(body=b, update=u):
                    scan(b)
                    scan(u)
                case _:
                    pass

    scan(p.body)
    return tuple(n for n in p.output_scalars if n in hit)


def required_targets(p: IRProgram) -> tuple[str, ...]:
    """Outputs a candidate must cover: written scalars, fresh lists, and
    in-place mutated lists. Untouched parameters may be left implicit."""
    return assigned_scalars(p) + p.fresh_lists + p.mutated_lists


def validate_candidate(p: IRProgram, cand: Candidate) -> None:
    list_params = {n for n, t in p.params if t is Ty.LIST}
    outputs = set(p.output_scalars) | set(p.output_lists)
    seen: set[str] = set()
    for t in cand.terms:
        if t.target in seen:
            raise ShapeMismatch(f"two terms for target '{t.target}'")
        seen.add(t.target)
        if t.target not in outputs:
            raise ShapeMismatch(f"'{t.target}' is not a program output")
        if t.source is not None and t.source not in list_params:
            raise ShapeMismatch(
                f"source '{t.source}' is not a list parameter")
        if t.source_end is not None:
            raise ShapeMismatch("candidate terms must use whole sources")
        is_list_target = t.target in p.output_lists
        if is_list_target and t.terminal is not None:
            raise ShapeMismatch(f"scalar term for list output '{t.target}'")
        if not is_list_target and t.terminal is None and not t.unchanged:
            raise ShapeMismatch(f"list term for scalar output '{t.target}'")
        if t.unchanged and t.target not in list_params:
            raise ShapeMismatch(
                f"<unchanged> needs a pre-existing list, got '{t.target}'")
    for target in required_targets(p):
        if target not in seen:
            raise ShapeMismatch(f"no term for output '{target}'")


# --------------------------------------------------------------------------
# Counterexamples
# --------------------------------------------------------------------------


def constructors_for_vector(p: IRProgram, vector: tuple) -> tuple[str, ...]:
    """Render a pre-state vector as heap constructor calls."""
    out: list[str] = []
    for (name, ty), v in zip(p.params, vector):
        if ty is Ty.LIST:
            out.append(f"new h {name}")
            for i, x in enumerate(v):
                out.append(f"add h {name} {i} {x}")
        else:
            out.append(f"int {name} {v}")
    return tuple(out)


def state_from_vector(p: IRProgram, vector: tuple) -> ProgramState:
    lists = {}
    scalars = {}
    for (name, ty), v in zip(p.params, vector):
        if ty is Ty.LIST:
            lists[name] = tuple(v)
        else:
            scalars[name] = v
    return ProgramState.make(lists, scalars=scalars)


def outcome_to_json(p: IRProgram, outcome: tuple) -> dict:
    """Expand a compiled Outcome into named, JSON-ready form."""
    status, scalars, roots = outcome
    doc: dict = {"status": status}
    doc["scalars"] = {n: v for n, v in zip(p.output_scalars, scalars)}
    lists: dict = {}
    aliases: dict = {}
    for i, (name, (cls, vals)) in enumerate(zip(p.output_lists, roots)):
        lists[name] = list(vals)
        if cls is not None and cls != i:
            aliases[name] = p.output_lists[cls]
    doc["lists"] = lists
    if aliases:
        doc["aliases"] = aliases
    return doc


@dataclass(frozen=True)
class Counterexample:
    """First pre-state on which verification failed."""

    vector: tuple
    constructors: tuple[str, ...]
    failed_vc: dict
    expected: dict
    actual: dict

    def to_json(self) -> dict:
        return {
            "constructors": list(self.constructors),
            "failedVC": dict(self.failed_vc),
            "expected": self.expected,
            "actual": self.actual,
        }

    def __str__(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    counterexample: Optional[Counterexample]
    states_checked: int


# --------------------------------------------------------------------------
# VC descriptors
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VC:
    """One named condition checked over every enumerated pre-state.

    Base: the invariant holds on first arrival at the loop head.
    Inductive: each arrival-to-arrival step preserves it.
    Exit: leaving the loop establishes the surrounding fact — for a
    top-level loop the program's final state must match the candidate; for a
    nested loop the enclosing invariant must still hold (its arrivals are
    checked under the enclosing loop's conditions).
    """

    kind: str  # "Base" | "Inductive" | "Exit"
    loop_id: Optional[int]
    description: str


def make_vcs(p: IRProgram, cand: Candidate) -> tuple[VC, ...]:
    validate_candidate(p, cand)
    if not p.loops:
        return (VC("Exit", None, "final state matches the candidate"),)
    vcs: list[VC] = []
    for li in sorted(p.loops, key=lambda li: li.id):
        where = f"loop {li.id}"
        inv = "enclosing invariant" if li.parent is not None else \
            "candidate terms cut at the loop's progress point"
        vcs.append(VC("Base", li.id, f"{inv} holds on entry to {where}"))
        vcs.append(VC("Inductive", li.id,
                      f"one iteration of {where} preserves the {inv}"))
        if li.parent is None:
            vcs.append(VC("Exit", li.id,
                          f"after {where} the final state matches the candidate"))
        else:
            vcs.append(VC("Exit", li.id,
                          f"leaving {where} re-establishes the {inv}"))
    return tuple(vcs)


# --------------------------------------------------------------------------
# Cut positions and invariant families
# --------------------------------------------------------------------------


def _top_ancestor(p: IRProgram, loop_id: int) -> LoopInfo:
    li = p.loop_by_id(loop_id)
    while li.parent is not None:
        li = p.loop_by_id(li.parent)
    return li


def cut_position(st: ProgramState, cut: CutRef, pre_len: int) -> int:
    """How many pre-state elements of cut.list the loop has consumed.

    Iterator cuts survive structural removal: consumed = pre length minus
    what is still ahead of the cursor. Index cuts clamp into [0, pre length].
    """
    if cut.kind == "iterator":
        it = st.iters.get(cut.var)
        if it is None:
            return 0
        live = len(st.lists[it.lid])
        k = pre_len - (live - it.cursor)
    else:
        v = st.scalars.get(cut.var)
        k = v if v is not None else 0
    return min(max(k, 0), pre_len)


class _Violation(Exception):
    def __init__(self, kind: str, loop_id: Optional[int], target: str,
                 expected, actual):
        self.kind = kind
        self.loop_id = loop_id
        self.target = target
        self.expected = expected
        self.actual = actual


class _InvariantChecker:
    """Evaluates each top-level loop's derived invariant at head states.

    Per target family:
      fresh list        — current == stages(pre_source[:k])
      in-place sorted   — prefix sorted, multiset preserved, split ordered
      in-place other    — current == stages(pre_source[:k]) ++ pre_source[k:]
      scalar            — current == terminal(stages(pre_source[:k]))
      sourceless        — evaluated whole (const / <new> / <unchanged>)
    """

    def __init__(self, p: IRProgram, cand: Candidate):
        self.p = p
        # families[top_loop_id] = list of (term, cut_or_None, evaluator)
        self.families: dict[int, list[tuple[PipelineTerm, Optional[CutRef],
                                            Optional[Callable]]]] = {}
        for li in p.loops:
            if li.parent is not None:
                continue
            cut_by_list = {c.list: c for c in li.cuts}
            fam = []
            for t in cand.terms:
                if t.source is None:
                    fam.append((t, None, None))
                    continue
                cut = cut_by_list.get(t.source)
                if cut is None:
                    continue  # this loop does not advance the term's source
                if t.target in p.output_lists:
                    if t.target in p.mutated_lists and _is_pure_sorted(t):
                        fam.append((t, cut, None))  # checked directly
                    else:
                        fam.append((t, cut, compile_term(replace(t, terminal=None))))
                else:
                    fam.append((t, cut, compile_term(t)))
            self.families[li.id] = fam
        # descendants[loop] = loops whose arrival counters reset when `loop`
        # arrives (a fresh entry restarts their Base/Inductive bookkeeping)
        self.descendants: dict[int, tuple[int, ...]] = {}
        for li in p.loops:
            ds = []
            for other in p.loops:
                anc = other.parent
                while anc is not None:
                    if anc == li.id:
                        ds.append(other.id)
                        break
                    anc = p.loop_by_id(anc).parent
            self.descendants[li.id] = tuple(ds)

    def attach(self, pre: ProgramState) -> Callable[[int, ProgramState], None]:
        p = self.p
        pre_vals = {n: pre.values(n) for n, ty in p.params if ty is Ty.LIST}
        sizes = {n: len(v) for n, v in pre_vals.items()}
        arrivals: dict[int, int] = {}

        def on_head(loop_id: int, st: ProgramState) -> None:
            top = _top_ancestor(p, loop_id)
            n = arrivals.get(loop_id, 0)
            arrivals[loop_id] = n + 1
            for d in self.descendants.get(loop_id, ()):
                arrivals.pop(d, None)
            kind = "Base" if n == 0 else "Inductive"
            for t, cut, ev in self.families.get(top.id, ()):
                bad = self._check_term(t, cut, ev, st, pre, pre_vals, sizes)
                if bad is not None:
                    raise _Violation(kind, loop_id, t.target, bad[0], bad[1])

        return on_head

    def _check_term(self, t: PipelineTerm, cut: Optional[CutRef],
                    ev: Optional[Callable], st: ProgramState,
                    pre: ProgramState, pre_vals: dict, sizes: dict):
        """None if the invariant holds, else (expected, actual)."""
        if t.source is None:
            if t.unchanged:
                if st.refs.get(t.target) is None:
                    return None
                cur = st.values(t.target)
                want = pre.values(t.target)
                return None if cur == want else (list(want), list(cur))
            if isinstance(t.terminal, TmConst):
                cur = st.scalars.get(t.target)
                if cur is None:
                    return None
                want = t.terminal.value
                return None if cur == want else (want, cur)
            # <new>: stays empty
            if st.refs.get(t.target) is None:
                return None
            cur = st.values(t.target)
            return None if cur == () else ([], list(cur))

        src_pre = pre_vals[t.source]
        k = cut_position(st, cut, len(src_pre))
        prefix = src_pre[:k]

        if t.target in self.p.output_lists:
            if st.refs.get(t.target) is None:
                return None
            cur = st.values(t.target)
            if ev is None:  # in-place sorted
                ok = (sorted(cur) == sorted(src_pre)
                      and all(cur[i] <= cur[i + 1] for i in range(k - 1))
                      and (k == 0 or k >= len(cur)
                           or max(cur[:k]) <= min(cur[k:])))
                if ok:
                    return None
                return (f"sorted prefix of length {k}", list(cur))
            done = ev(prefix, sizes)
            want = done + src_pre[k:] if t.target in self.p.mutated_lists \
                else done
            return None if cur == want else (list(want), list(cur))

        cur = st.scalars.get(t.target)
        if cur is None:
            return None
        want = ev(prefix, sizes)
        return None if cur == want else (want, cur)


def _is_pure_sorted(t: PipelineTerm) -> bool:
    return len(t.stages) == 1 and isinstance(t.stages[0], StSorted) \
        and t.terminal is None


# --------------------------------------------------------------------------
# Final-state comparison
# --------------------------------------------------------------------------


def state_outcome(p: IRProgram, st: ProgramState) -> tuple:
    """Project a final interpreter state into compiled-Outcome shape."""
    scalars = tuple(st.scalars.get(n) for n in p.output_scalars)
    first: dict[int, int] = {}
    roots = []
    for i, name in enumerate(p.output_lists):
        lid = st.refs.get(name)
        if lid is None:
            roots.append((None, ()))
        else:
            roots.append((first.setdefault(lid, i), tuple(st.lists[lid])))
    return (st.status, scalars, tuple(roots))


def _candidate_args(p: IRProgram, vector: tuple) -> tuple:
    lists = []
    ints = []
    for (n, ty), v in zip(p.params, vector):
        if ty is Ty.LIST:
            lists.append(v)
        else:
            ints.append(v)
    return tuple(lists) + tuple(ints)


def _exit_loop_for(p: IRProgram, cand: Candidate, expected: dict,
                   actual: dict) -> Optional[int]:
    """Attribute a final-state mismatch to the top-level loop that advances
    the first differing output's source."""
    diff: Optional[str] = None
    for n in p.output_scalars:
        if expected["scalars"].get(n) != actual["scalars"].get(n):
            diff = n
            break
    if diff is None:
        for n in p.output_lists:
            if expected["lists"].get(n) != actual["lists"].get(n):
                diff = n
                break
    tops = [li for li in p.loops if li.parent is None]
    if diff is not None:
        t = cand.term_for(diff)
        if t is not None and t.source is not None:
            for li in tops:
                if any(c.list == t.source for c in li.cuts):
                    return li.id
    return tops[0].id if tops else None


# --------------------------------------------------------------------------
# Checkers
# --------------------------------------------------------------------------


def check_end_to_end(p: IRProgram, cand: Candidate, bounds: Bounds,
                     validate: bool = True,
                     deadline: Optional[float] = None) -> VerifyResult:
    """Compiled original vs compiled candidate over the whole universe.

    Raises NotRefactorableError on the first pre-state where the original
    faults or runs out of fuel, and TimeoutExceeded past the deadline.
    """
    if validate:
        validate_candidate(p, cand)
    terms = cand.post_terms()
    fuel = bounds.fuel

    scan = compile_verifier(p, terms)
    if scan is not None:
        n, vector, got = scan(param_domains(p, bounds), fuel, deadline)
        if vector is None:
            return VerifyResult(ok=True, counterexample=None,
                                states_checked=n)
        if got[0] != OK:
            raise NotRefactorableError(constructors_for_vector(p, vector),
                                       got[0])
        want = compile_candidate(p, terms)(*_candidate_args(p, vector))
        return VerifyResult(
            ok=False, states_checked=n,
            counterexample=_exit_cex(p, cand, vector, got, want))

    orig = compile_ir(p)
    g = compile_candidate(p, terms)
    types = [ty for _, ty in p.params]
    n = 0
    for vector in enumerate_param_vectors(p, bounds):
        n += 1
        if deadline is not None and n % 65536 == 0 and _now() > deadline:
            raise TimeoutExceeded(f"verification at state {n}")
        args = tuple(list(v) if ty is Ty.LIST else v
                     for ty, v in zip(types, vector))
        got = orig(*args, _fuel=fuel)
        if got[0] != OK:
            raise NotRefactorableError(constructors_for_vector(p, vector),
                                       got[0])
        want = g(*_candidate_args(p, vector))
        if got != want:
            return VerifyResult(
                ok=False, states_checked=n,
                counterexample=_exit_cex(p, cand, vector, got, want))
    return VerifyResult(ok=True, counterexample=None, states_checked=n)


def _exit_cex(p: IRProgram, cand: Candidate, vector: tuple, got: tuple,
              want: tuple) -> Counterexample:
    expected = outcome_to_json(p, got)
    actual = outcome_to_json(p, want)
    return Counterexample(
        vector=vector,
        constructors=constructors_for_vector(p, vector),
        failed_vc={"kind": "Exit",
                   "loopId": _exit_loop_for(p, cand, expected, actual)},
        expected=expected,
        actual=actual,
    )


def check_vcs(p: IRProgram, cand: Candidate, bounds: Bounds,
              validate: bool = True,
              deadline: Optional[float] = None) -> VerifyResult:
    """Invariant-based checking: realize loop-head states by concrete
    execution and test the derived invariants there, then compare final
    states. Strictly stronger per pre-state than end-to-end equality."""
    if validate:
        validate_candidate(p, cand)
    checker = _InvariantChecker(p, cand)
    g = compile_candidate(p, cand.post_terms())
    fuel = bounds.fuel
    n = 0
    for vector in enumerate_param_vectors(p, bounds):
        n += 1
        if deadline is not None and n % 4096 == 0 and _now() > deadline:
            raise TimeoutExceeded(f"verification at state {n}")
        pre = state_from_vector(p, vector)
        try:
            final = run(p, pre, fuel=fuel, on_loop_head=checker.attach(pre))
        except _Violation as v:
            cex = Counterexample(
                vector=vector,
                constructors=constructors_for_vector(p, vector),
                failed_vc={"kind": v.kind, "loopId": v.loop_id},
                expected={"target": v.target, "value": v.expected},
                actual={"target": v.target, "value": v.actual},
            )
            return VerifyResult(ok=False, counterexample=cex,
                                states_checked=n)
        if final.status != OK:
            raise NotRefactorableError(constructors_for_vector(p, vector),
                                       final.status)
        got = state_outcome(p, final)
        want = g(*_candidate_args(p, vector))
        if got != want:
            return VerifyResult(
                ok=False, states_checked=n,
                counterexample=_exit_cex(p, cand, vector, got, want))
    return VerifyResult(ok=True, counterexample=None, states_checked=n)


def verify(p: IRProgram, cand: Candidate, bounds: Bounds,
           mode: str = "equivalence",
           deadline: Optional[float] = None) -> VerifyResult:
    """Dispatch on verification mode ('equivalence' or 'invariants')."""
    if mode == "invariants":
        return check_vcs(p, cand, bounds, deadline=deadline)
    return check_end_to_end(p, cand, bounds, deadline=deadline)
