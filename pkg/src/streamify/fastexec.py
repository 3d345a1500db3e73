"""Compiled execution for bulk verification.

Exhaustive checking evaluates the original program and a candidate on every
pre-state in the bounded universe — millions of runs for two-list programs —
so both sides get compiled:

  * the IR is translated once into a Python function over plain lists, with
    Java's fault/iterator/overflow semantics inlined (`compile_ir`);
  * each pipeline term becomes a closure over value tuples, memoized on what
    it actually reads — its source tuple plus any pre-state sizes — so a
    term over `l` is evaluated once per distinct `l`, not once per (l, p)
    pair (`compile_candidate`).

Both report the same canonical outcome shape: (status, scalar values in
output order, per output list its alias class and value tuple). The
tree-walking interpreter remains the authority; dedicated tests drive both
on the same states and require identical outcomes.

Fuel accounting differs deliberately: the interpreter ticks per statement,
the compiled code per loop-head arrival. Within the bounded universe any
terminating corpus program finishes far under either budget, so the only
behavioral agreement required is "out of fuel iff the other is" on diverging
loops, which both detect.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

from .interp import (
    DEFAULT_FUEL, E_ARITH, E_CONCUR, E_ILLEGAL, E_INDEX, E_NOSUCH, E_NULL,
    OK, OUT_OF_FUEL, jdiv, jmod, wrap32,
)
from .ir import (
    IBin, IConst, IExpr, IGet, IHasNext, IRProgram, ISize, IUn, IVar,
    SAddAt, SAddLast, SAliasList, SAssign, SBreak, SClear, SContinue, SEval,
    SIf, SIterInit, SNewList, SNext, SRemove, SReturn, SSet, SWhile,
)
from .pipeline import (
    PipelineTerm, StFilter, StLimit, StMap, StSkip, StSorted, TmConst,
    TmExists, TmForall, TmMax, TmMin, TmReduce, eval_term_values,
)
from .jst import SizeRef
from .syntax import Ty

Outcome = tuple  # (status, scalars tuple, roots tuple of (alias_cls, values))


class _F(Exception):
    def __init__(self, s: str):
        self.s = s


class _R(Exception):
    pass


def _oob():
    raise _F(E_INDEX)


def _oof():
    raise _F(OUT_OF_FUEL)


def _cme():
    raise _F(E_CONCUR)


def _nse():
    raise _F(E_NOSUCH)


def _ill():
    raise _F(E_ILLEGAL)


def _npe():
    raise _F(E_NULL)


def _get(lst, i):
    if lst is None:
        _npe()
    if 0 <= i < len(lst):
        return lst[i]
    _oob()


def _jdivz(a, b):
    if b == 0:
        raise _F(E_ARITH)
    return jdiv(a, b)


def _jmodz(a, b):
    if b == 0:
        raise _F(E_ARITH)
    return jmod(a, b)


def _canon(status, scalars, roots) -> Outcome:
    seen: dict[int, int] = {}
    rs = []
    for i, o in enumerate(roots):
        if o is None:
            rs.append((None, ()))
        else:
            rs.append((seen.setdefault(id(o), i), tuple(o)))
    return (status, scalars, tuple(rs))


# --------------------------------------------------------------------------
# IR compilation
# --------------------------------------------------------------------------


def _m(name: str) -> str:
    """Mangle a program variable into a safe Python identifier."""
    return "u_" + name.replace("$", "S")


class _IRCompiler:
    def __init__(self, p: IRProgram):
        self.p = p
        self.lines: list[str] = []
        self.flag_n = 0

    def emit(self, indent: int, text: str) -> None:
        self.lines.append("    " * indent + text)

    # expressions --------------------------------------------------------

    def ce(self, e: IExpr) -> str:
        match e:
            case IConst(value=v):
                return repr(v)
            case IVar(name=n):
                return _m(n)
            case IUn(op="!", operand=x):
                return f"(not {self.ce(x)})"
            case IUn(op="-", operand=x):
                return f"_w(-{self.ce(x)})"
            case IBin(op="&&", left=l, right=r):
                return f"({self.ce(l)} and {self.ce(r)})"
            case IBin(op="||", left=l, right=r):
                return f"({self.ce(l)} or {self.ce(r)})"
            case IBin(op=op, left=l, right=r) if op in ("<", "<=", ">", ">=", "==", "!="):
                return f"({self.ce(l)} {op} {self.ce(r)})"
            case IBin(op="/", left=l, right=r):
                return f"_jdivz({self.ce(l)}, {self.ce(r)})"
            case IBin(op="%", left=l, right=r):
                return f"_jmodz({self.ce(l)}, {self.ce(r)})"
            case IBin(op=op, left=l, right=r):
                return f"_w({self.ce(l)} {op} {self.ce(r)})"
            case IGet(list=l, index=i):
                return f"_get({_m(l)}, {self.ce(i)})"
            case ISize(list=l):
                return f"len({_m(l)})"
            case IHasNext(iter=it):
                return f"({_m(it)}_cur != len({_m(it)}_lst))"
        raise AssertionError(e)

    # statements ---------------------------------------------------------

    def seq(self, stmts, indent: int, brk: Optional[str], cnt: Optional[str]) -> None:
        if not stmts:
            self.emit(indent, "pass")
            return
        for s in stmts:
            self.stmt(s, indent, brk, cnt)

    def stmt(self, s, indent: int, brk: Optional[str], cnt: Optional[str]) -> None:
        match s:
            case SAssign(name=n, expr=e):
                self.emit(indent, f"{_m(n)} = {self.ce(e)}")
            case SEval(expr=e):
                self.emit(indent, f"{self.ce(e)}")
            case SNewList(name=n):
                self.emit(indent, f"{_m(n)} = []")
            case SAliasList(dst=d, src=r):
                self.emit(indent, f"if {_m(r)} is None: _npe()")
                self.emit(indent, f"{_m(d)} = {_m(r)}")
            case SIterInit(iter=it, list=l):
                m = _m(it)
                self.emit(indent, f"if {_m(l)} is None: _npe()")
                self.emit(indent, f"{m}_lst = {_m(l)}")
                self.emit(indent, f"{m}_cur = 0; {m}_last = -1")
                self.emit(indent, f"{m}_exp = _mc.get(id({m}_lst), 0)")
            case SNext(dst=d, iter=it):
                m = _m(it)
                self.emit(indent, f"if {m}_exp != _mc.get(id({m}_lst), 0): _cme()")
                self.emit(indent, f"if {m}_cur >= len({m}_lst): _nse()")
                if d is not None:
                    self.emit(indent, f"{_m(d)} = {m}_lst[{m}_cur]")
                self.emit(indent, f"{m}_last = {m}_cur; {m}_cur += 1")
            case SRemove(iter=it):
                m = _m(it)
                self.emit(indent, f"if {m}_exp != _mc.get(id({m}_lst), 0): _cme()")
                self.emit(indent, f"if {m}_last < 0: _ill()")
                self.emit(indent, f"del {m}_lst[{m}_last]")
                self.emit(indent, f"_mc[id({m}_lst)] = _mc.get(id({m}_lst), 0) + 1")
                self.emit(indent, f"{m}_exp = _mc[id({m}_lst)]")
                self.emit(indent, f"{m}_cur = {m}_last; {m}_last = -1")
            case SAddLast(list=l, value=v):
                self.emit(indent, f"if {_m(l)} is None: _npe()")
                self.emit(indent, f"{_m(l)}.append(_w({self.ce(v)}))")
                self.emit(indent, f"_mc[id({_m(l)})] = _mc.get(id({_m(l)}), 0) + 1")
            case SAddAt(list=l, index=i, value=v):
                self.emit(indent, f"_i = {self.ce(i)}; _v = _w({self.ce(v)})")
                self.emit(indent, f"if {_m(l)} is None: _npe()")
                self.emit(indent, f"if not (0 <= _i <= len({_m(l)})): _oob()")
                self.emit(indent, f"{_m(l)}.insert(_i, _v)")
                self.emit(indent, f"_mc[id({_m(l)})] = _mc.get(id({_m(l)}), 0) + 1")
            case SSet(list=l, index=i, value=v):
                self.emit(indent, f"_i = {self.ce(i)}; _v = _w({self.ce(v)})")
                self.emit(indent, f"if {_m(l)} is None: _npe()")
                self.emit(indent, f"if not (0 <= _i < len({_m(l)})): _oob()")
                self.emit(indent, f"{_m(l)}[_i] = _v")
            case SClear(list=l):
                self.emit(indent, f"if {_m(l)} is None: _npe()")
                self.emit(indent, f"del {_m(l)}[:]")
                self.emit(indent, f"_mc[id({_m(l)})] = _mc.get(id({_m(l)}), 0) + 1")
            case SIf(cond=c, then=t, els=e):
                self.emit(indent, f"if {self.ce(c)}:")
                self.seq(t, indent + 1, brk, cnt)
                if e:
                    self.emit(indent, "else:")
                    self.seq(e, indent + 1, brk, cnt)
            case SWhile(cond=c, body=b, update=u):
                has_cnt = _contains(b, SContinue)
                has_brk = _contains(b, SBreak)
                self.emit(indent, "while True:")
                self.emit(indent + 1, "_fl -= 1")
                self.emit(indent + 1, "if _fl < 0: _oof()")
                self.emit(indent + 1, f"if not {self.ce(c)}: break")
                if has_cnt:
                    flag = None
                    if has_brk:
                        flag = f"_brk{self.flag_n}"
                        self.flag_n += 1
                        self.emit(indent + 1, f"{flag} = False")
                    self.emit(indent + 1, "for _ in (0,):")
                    self.seq(b, indent + 2, flag, "break")
                    if flag:
                        self.emit(indent + 1, f"if {flag}: break")
                else:
                    self.seq(b, indent + 1, "break", None)
                for us in u:
                    self.stmt(us, indent + 1, None, None)
            case SBreak():
                if brk == "break":
                    self.emit(indent, "break")
                elif brk is None:
                    raise AssertionError("break outside loop")
                else:
                    self.emit(indent, f"{brk} = True; break")
            case SContinue():
                assert cnt == "break"
                self.emit(indent, "break")
            case SReturn():
                self.emit(indent, "raise _R()")
            case _:
                raise AssertionError(s)


def _contains(stmts, kind) -> bool:
    """Does a break/continue of this loop appear (not inside nested loops)?"""
    for s in stmts:
        if isinstance(s, kind):
            return True
        if isinstance(s, SIf) and (_contains(s.then, kind) or _contains(s.els, kind)):
            return True
    return False


_HELPERS = {
    "_w": wrap32, "_jdivz": _jdivz, "_jmodz": _jmodz, "_get": _get,
    "_oob": _oob, "_oof": _oof, "_cme": _cme, "_nse": _nse, "_ill": _ill,
    "_npe": _npe, "_F": _F, "_R": _R, "_canon": _canon,
}


def compile_ir(p: IRProgram) -> Callable:
    """Compile to f(*params, fuel=...) -> Outcome.

    List parameters are passed as Python lists (the function mutates its own
    copies — callers pass fresh lists per run; aliasing is expressed by
    passing the same list object twice).
    """
    c = _IRCompiler(p)
    args = ", ".join(_m(n) for n, _ in p.params)
    sig = f"def _f({args}{', ' if args else ''}_fuel={DEFAULT_FUEL}):"
    c.emit(0, sig)
    c.emit(1, "_mc = {}")
    c.emit(1, "_fl = _fuel")
    c.emit(1, "_status = 'ok'")
    param_names = {n for n, _ in p.params}
    for n, t in p.locals:
        if n in param_names:
            continue
        if t is Ty.INT:
            c.emit(1, f"{_m(n)} = None")
        elif t is Ty.LIST:
            c.emit(1, f"{_m(n)} = None")
    c.emit(1, "try:")
    c.seq(p.body, 2, None, None)
    c.emit(1, "except _R: pass")
    c.emit(1, "except _F as _e: _status = _e.s")
    scalars = ", ".join(_m(n) for n in p.output_scalars)
    scalars_t = f"({scalars},)" if p.output_scalars else "()"
    roots = ", ".join(_m(n) for n in p.output_lists)
    roots_t = f"({roots},)" if p.output_lists else "()"
    c.emit(1, f"return _canon(_status, {scalars_t}, {roots_t})")

    src = "\n".join(c.lines)
    ns: dict = dict(_HELPERS)
    exec(compile(src, f"<ir:{p.name}>", "exec"), ns)
    fn = ns["_f"]
    fn.__ir_source__ = src
    return fn


# --------------------------------------------------------------------------
# Candidate compilation
# --------------------------------------------------------------------------


def term_size_refs(t: PipelineTerm) -> tuple[str, ...]:
    names: list[str] = []

    def visit(c) -> None:
        if isinstance(c, SizeRef) and c.name not in names:
            names.append(c.name)

    for s in t.stages:
        match s:
            case StMap(mapper=m):
                visit(m.b)
            case StSkip(n=n) | StLimit(n=n):
                visit(n)
            case _:
                pass
    return tuple(names)


def compile_term(t: PipelineTerm) -> Callable[[tuple, dict], Union[int, tuple]]:
    """Memoized value-level evaluator keyed on what the term reads."""
    refs = term_size_refs(t)
    cache: dict = {}

    def run(src_vals: tuple, sizes: dict) -> Union[int, tuple]:
        key = (src_vals, tuple(sizes[r] for r in refs))
        hit = cache.get(key)
        if hit is None:
            hit = eval_term_values(t, src_vals, {"sizes": sizes})
            cache[key] = hit
        return hit

    return run


def compile_candidate(p: IRProgram, terms: dict[str, PipelineTerm]) -> Callable:
    """Compile postTerms to g(*params) -> Outcome (same layout as compile_ir).

    Params arrive as value tuples (per list) and ints; outputs without a term
    are unchanged (only valid for parameters). Candidates never fault.
    """
    list_params = [n for n, t in p.params if t is Ty.LIST]
    int_params = [n for n, t in p.params if t is Ty.INT]
    compiled: dict[str, tuple[PipelineTerm, Callable]] = {
        tgt: (t, compile_term(t)) for tgt, t in terms.items()
    }

    def g(*args) -> Outcome:
        vals = {n: tuple(v) for n, v in zip(list_params, args)}
        ints = {n: v for n, v in zip(int_params, args[len(list_params):])}
        sizes = {n: len(v) for n, v in vals.items()}
        # identity objects for unchanged parameter lists (alias classes)
        identity_obj: dict[str, list] = {n: list(v) for n, v in vals.items()}

        scalars = []
        for n in p.output_scalars:
            entry = compiled.get(n)
            if entry is None:
                scalars.append(ints.get(n))
                continue
            t, fn = entry
            src = vals[t.source] if t.source is not None else ()
            scalars.append(fn(src, sizes))

        roots = []
        for n in p.output_lists:
            entry = compiled.get(n)
            if entry is None or entry[0].unchanged:
                roots.append(identity_obj.get(n))
                continue
            t, fn = entry
            src = vals[t.source] if t.source is not None else ()
            roots.append(list(fn(src, sizes)))
        return _canon(OK, tuple(scalars), tuple(roots))

    return g


# --------------------------------------------------------------------------
# Pipeline-set semantic equality
# --------------------------------------------------------------------------


def pipelines_equal(a: dict[str, PipelineTerm], b: dict[str, PipelineTerm],
                    bounds) -> bool:
    """Brute-force semantic equality of two term sets over the universe.

    Enumerates only what either side reads: full value sequences for roots
    used as a source, bare lengths for roots read only through .size().
    """
    from itertools import product
    from .universe import list_sequences

    if set(a) != set(b):
        return False
    need: dict[str, str] = {}
    for terms in (a, b):
        for t in terms.values():
            if t.source is not None:
                need[t.source] = "full"
            if t.unchanged:
                need[t.target] = "full"  # identity reads its own pre-value
            for r in term_size_refs(t):
                need.setdefault(r, "size")
    dims: list[tuple[str, list]] = []
    for root, kind in sorted(need.items()):
        if kind == "full":
            dims.append((root, list(list_sequences(bounds))))
        else:
            dims.append((root, [(0,) * n for n in range(bounds.max_len + 1)]))

    fa = {tgt: (t, compile_term(t)) for tgt, t in a.items()}
    fb = {tgt: (t, compile_term(t)) for tgt, t in b.items()}
    names = [r for r, _ in dims]
    for combo in product(*(seqs for _, seqs in dims)):
        vals = dict(zip(names, combo))
        sizes = {n: len(v) for n, v in vals.items()}
        for tgt in a:
            ta, ea = fa[tgt]
            tb, eb = fb[tgt]
            ra = _term_result(ta, ea, vals, sizes)
            rb = _term_result(tb, eb, vals, sizes)
            if ra != rb:
                return False
    return True


def _term_result(t: PipelineTerm, fn, vals: dict, sizes: dict):
    if t.unchanged:
        return vals[t.target]
    src = vals[t.source] if t.source is not None else ()
    return fn(src, sizes)


# --------------------------------------------------------------------------
# Fused bulk verification
# --------------------------------------------------------------------------


def _contains_deep(stmts, kind) -> bool:
    for s in stmts:
        if isinstance(s, kind):
            return True
        if isinstance(s, SIf) and (_contains_deep(s.then, kind)
                                   or _contains_deep(s.els, kind)):
            return True
        if isinstance(s, SWhile) and (_contains_deep(s.body, kind)
                                      or _contains_deep(s.update, kind)):
            return True
    return False


def term_closure(t: PipelineTerm) -> tuple[Callable, tuple[str, ...]]:
    """fn(src_vals, *size_values) in the returned size-name order."""
    refs = term_size_refs(t)

    def fn(src, *szs):
        return eval_term_values(t, src, {"sizes": dict(zip(refs, szs))})

    return fn, refs


def compile_verifier(p: IRProgram, terms: dict[str, PipelineTerm]
                     ) -> Optional[Callable]:
    """Fuse enumeration, original run, and outcome comparison into one
    generated scan: scan(domains, fuel, deadline) -> (n, vector, got).

    vector is None when every state agreed; otherwise it is the first
    pre-state vector where the original faulted (got[0] != 'ok') or the
    candidate disagreed. Per-term results are memoized on exactly what each
    term reads, so a term over one parameter is evaluated once per distinct
    value of that parameter.

    Returns None when the program declares list aliases — then candidate
    alias classes are nontrivial and the caller must use the generic path.
    """
    if _contains_deep(p.body, SAliasList):
        return None
    slot = {n: j for j, (n, _) in enumerate(p.params)}
    L: list[str] = []
    ns: dict = {"_product": __import__("itertools").product, "_SENT": object(),
                "_orig": compile_ir(p), "_now": __import__("time").monotonic}
    from .errors import TimeoutExceeded
    ns["_TO"] = TimeoutExceeded

    L.append("def _scan(_domains, _fuel, _deadline=None):")
    L.append("    _n = 0")
    L.append("    for _v in _product(*_domains):")
    L.append("        _n += 1")
    L.append("        if _deadline is not None and not _n & 65535 "
             "and _now() > _deadline:")
    L.append("            raise _TO('verification at state %d' % _n)")
    call = []
    for j, (name, ty) in enumerate(p.params):
        if ty is Ty.LIST:
            L.append(f"        _a{j} = list(_v[{j}])")
            call.append(f"_a{j}")
        else:
            call.append(f"_v[{j}]")
    L.append(f"        _got = _orig({', '.join(call)}{', ' if call else ''}"
             "_fuel=_fuel)")
    L.append("        if _got[0] != 'ok':")
    L.append("            return (_n, _v, _got)")

    def memo_expr(i: int, t: PipelineTerm) -> None:
        fn, refs = term_closure(t)
        ns[f"_f{i}"] = fn
        ns[f"_m{i}"] = {}
        src = f"_v[{slot[t.source]}]"
        sz = [f"len(_v[{slot[r]}])" for r in refs]
        key = src if not sz else f"({src}, {', '.join(sz)})"
        L.append(f"        _k = {key}")
        L.append(f"        _w = _m{i}.get(_k, _SENT)")
        L.append("        if _w is _SENT:")
        args = ", ".join([src] + sz)
        L.append(f"            _w = _f{i}({args})")
        L.append(f"            _m{i}[_k] = _w")

    if p.output_scalars:
        L.append("        _s = _got[1]")
    for i, name in enumerate(p.output_scalars):
        t = terms.get(name)
        if t is None:
            want = f"_v[{slot[name]}]" if name in slot else "None"
            L.append(f"        if _s[{i}] != {want}:")
            L.append("            return (_n, _v, _got)")
        elif isinstance(t.terminal, TmConst):
            L.append(f"        if _s[{i}] != {t.terminal.value}:")
            L.append("            return (_n, _v, _got)")
        elif t.source is None:
            return None  # sourceless computed scalar: generic path
        else:
            memo_expr(i, t)
            L.append(f"        if _s[{i}] != _w:")
            L.append("            return (_n, _v, _got)")

    if p.output_lists:
        L.append("        _r = _got[2]")
    for i, name in enumerate(p.output_lists):
        t = terms.get(name)
        L.append(f"        _e = _r[{i}]")
        if t is None or t.unchanged:
            if name not in slot:
                return None  # unchanged non-parameter: generic path
            L.append(f"        if _e[0] != {i} or _e[1] != _v[{slot[name]}]:")
            L.append("            return (_n, _v, _got)")
        elif t.source is None:
            L.append(f"        if _e[0] != {i} or _e[1] != ():")
            L.append("            return (_n, _v, _got)")
        else:
            memo_expr(100 + i, t)
            L.append(f"        if _e[0] != {i} or _e[1] != _w:")
            L.append("            return (_n, _v, _got)")

    L.append("    return (_n, None, None)")
    src_text = "\n".join(L)
    exec(compile(src_text, f"<verify:{p.name}>", "exec"), ns)
    fn = ns["_scan"]
    fn.__ir_source__ = src_text
    return fn
