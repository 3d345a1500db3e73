"""AST to IR lowering.

Runs the static checks, then rewrites every collection call into an explicit
heap step. Structured control flow is preserved; `for` becomes `while` with
the update statements in a dedicated slot (so `continue` still runs them).

Key judgments made here, consumed downstream:
  * accessed parameters: a parameter the body never touches is dropped, so
    state enumeration and equivalence never quantify over it;
  * observable outputs: int parameters and method-level int locals (scalars),
    list parameters and method-level list locals (references) — variables
    declared inside a loop or branch die at the method's end and are not
    outputs, and iterators never are;
  * mutated vs fresh lists: a visible list is "mutated" if any structural
    operation (add/set/clear, or remove through one of its iterators) can
    reach it through the static alias groups; a "fresh" list is a
    method-level local born from `new` and never aliased;
  * loop cut references: for each loop, where its traversal progress can be
    read off — `hasNext(it)` in the guard or `it.next()` in the body gives an
    iterator cut; a guard conjunct `i < …size(l)…` gives an index cut.

`it.next()` is the only impure call that may sit inside an expression; it is
hoisted to a fresh temporary before the enclosing statement. Hoisting out of
the right operand of `&&`/`||` would change whether the call runs, and
hoisting out of a loop condition would change how often, so both are
rejected as unsupported rather than silently reordered.
"""

from __future__ import annotations

from .checker import check
from .errors import UnsupportedConstruct
from .ir import (
    CutRef, IBin, IConst, IExpr, IGet, IHasNext, IRProgram, IRStmt, ISize,
    IUn, IVar, LoopInfo, MUTATORS, SAddAt, SAddLast, SAliasList, SAssign,
    SBreak, SClear, SContinue, SEval, SIf, SIterInit, SNewList, SNext,
    SRemove, SReturn, SSet, SWhile,
)
from .syntax import (
    Assign, Binary, Block, Break, Call, CallStmt, Continue, Decl, For, If,
    IntLit, MiniJProgram, NewList, Return, Ty, Unary, Var, While,
)


def lower(prog: MiniJProgram) -> IRProgram:
    info = check(prog)
    return _Lowerer(prog, info.types).run()


def _collect_accessed(node, acc: set[str]) -> None:
    match node:
        case Var(name=n):
            acc.add(n)
        case Call(recv=r, args=args):
            acc.add(r)
            for a in args:
                _collect_accessed(a, acc)
        case IntLit() | NewList() | Break() | Continue():
            pass
        case Unary(operand=x):
            _collect_accessed(x, acc)
        case Binary(left=l, right=r):
            _collect_accessed(l, acc)
            _collect_accessed(r, acc)
        case Decl(init=init):
            if init is not None:
                _collect_accessed(init, acc)
        case Assign(name=n, expr=e):
            acc.add(n)
            _collect_accessed(e, acc)
        case CallStmt(call=c):
            _collect_accessed(c, acc)
        case Block(stmts=stmts):
            for s in stmts:
                _collect_accessed(s, acc)
        case If(cond=c, then=t, els=e):
            _collect_accessed(c, acc)
            _collect_accessed(t, acc)
            if e:
                _collect_accessed(e, acc)
        case While(cond=c, body=b):
            _collect_accessed(c, acc)
            _collect_accessed(b, acc)
        case For(init=i, cond=c, update=u, body=b):
            for part in (i, c, u, b):
                if part is not None:
                    _collect_accessed(part, acc)
        case Return(expr=e):
            if e is not None:
                _collect_accessed(e, acc)


class _Lowerer:
    def __init__(self, prog: MiniJProgram, types: dict[str, Ty]):
        self.prog = prog
        self.types = types
        self.heap_n = 0
        self.temp_n = 0
        self.loop_n = 0
        self.locals: list[tuple[str, Ty]] = []
        self.iter_sources: dict[str, str] = {}
        self.loops: list[LoopInfo] = []

    def fresh_heap(self) -> str:
        self.heap_n += 1
        return f"h{self.heap_n}"

    def fresh_temp(self) -> str:
        name = f"$n{self.temp_n}"
        self.temp_n += 1
        self.locals.append((name, Ty.INT))
        return name

    def run(self) -> IRProgram:
        accessed: set[str] = set()
        _collect_accessed(self.prog.body, accessed)
        params = tuple((n, t) for n, t in self.prog.params if n in accessed)

        for n, t in self.types.items():
            if not any(n == pn for pn, _ in self.prog.params):
                self.locals.append((n, t))

        body = tuple(self.seq(self.prog.body.stmts, parent=None))

        top_decls = [s for s in self.prog.body.stmts if isinstance(s, Decl)]
        output_scalars = tuple(
            [n for n, t in params if t is Ty.INT]
            + [d.name for d in top_decls if d.ty is Ty.INT])
        top_lists = [d.name for d in top_decls if d.ty is Ty.LIST]
        output_lists = tuple(
            [n for n, t in params if t is Ty.LIST] + top_lists)

        aliased = self._alias_involved(body)
        fresh = tuple(n for n in top_lists if n not in aliased)
        # In-place targets: structurally modified lists that existed before
        # the method ran (or might, through aliasing). Fresh locals are
        # rebuilt from empty instead.
        mutated = tuple(n for n in self._mutated_lists(body, output_lists)
                        if n not in fresh)

        return IRProgram(
            name=self.prog.name,
            params=params,
            locals=tuple(self.locals),
            body=body,
            output_scalars=output_scalars,
            output_lists=output_lists,
            mutated_lists=mutated,
            fresh_lists=fresh,
            loops=tuple(self.loops),
            iter_sources=dict(self.iter_sources),
        )

    # -- mutation / alias analysis ------------------------------------------

    def _alias_involved(self, body) -> set[str]:
        names: set[str] = set()

        def scan(stmts):
            for s in stmts:
                match s:
                    case SAliasList(dst=d, src=r):
                        names.add(d)
                        names.add(r)
                    case SIf(then=t, els=e):
                        scan(t)
                        scan(e)
                    case SWhile(body=b, update=u):
                        scan(b)
                        scan(u)
                    case _:
                        pass

        scan(body)
        return names

    def _mutated_lists(self, body, visible: tuple[str, ...]) -> tuple[str, ...]:
        # Flow-insensitive alias groups: conservative but sound for marking.
        parent: dict[str, str] = {}

        def find(x: str) -> str:
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a: str, b: str) -> None:
            parent[find(a)] = find(b)

        hit: set[str] = set()

        def scan(stmts):
            for s in stmts:
                match s:
                    case SAliasList(dst=d, src=r):
                        union(d, r)
                    case SAddLast(list=l) | SAddAt(list=l) | SSet(list=l) | SClear(list=l):
                        hit.add(l)
                    case SRemove(iter=it):
                        hit.add(self.iter_sources[it])
                    case SIf(then=t, els=e):
                        scan(t)
                        scan(e)
                    case SWhile(body=b, update=u):
                        scan(b)
                        scan(u)
                    case _:
                        pass

        scan(body)
        hit_groups = {find(x) for x in hit}
        return tuple(n for n in visible if find(n) in hit_groups)

    # -- expression lowering with next() hoisting ---------------------------

    def hoist(self, e, prefix: list[IRStmt], guarded: bool) -> IExpr:
        """Lower an expression; impure next() calls are emitted into prefix.

        `guarded` is true under the right operand of && or ||, where hoisting
        would execute a call Java might skip.
        """
        match e:
            case IntLit(value=v):
                return IConst(v)
            case Var(name=n):
                return IVar(n)
            case Unary(op=op, operand=x):
                return IUn(op, self.hoist(x, prefix, guarded))
            case Binary(op=op, left=l, right=r):
                lo = self.hoist(l, prefix, guarded)
                ro = self.hoist(r, prefix, guarded or op in ("&&", "||"))
                return IBin(op, lo, ro)
            case Call(recv=recv, method="next"):
                if guarded:
                    raise UnsupportedConstruct(
                        "next() under && or || cannot be hoisted",
                        e.pos[0], e.pos[1])
                tmp = self.fresh_temp()
                prefix.append(SNext(tmp, recv, h_out=self.fresh_heap()))
                return IVar(tmp)
            case Call(recv=recv, method="hasNext"):
                return IHasNext(recv)
            case Call(recv=recv, method="get", args=args):
                return IGet(recv, self.hoist(args[0], prefix, guarded))
            case Call(recv=recv, method="size"):
                return ISize(recv)
        raise AssertionError(f"expression not lowerable: {e!r}")

    def pure_cond(self, e, what: str) -> IExpr:
        prefix: list[IRStmt] = []
        out = self.hoist(e, prefix, guarded=False)
        if prefix:
            raise UnsupportedConstruct(
                f"next() in a {what} condition", e.pos[0], e.pos[1])
        return out

    # -- statement lowering --------------------------------------------------

    def seq(self, stmts, parent) -> list[IRStmt]:
        out: list[IRStmt] = []
        for s in stmts:
            self.stmt(s, out, parent)
        return out

    def stmt(self, s, out: list[IRStmt], parent) -> None:
        match s:
            case Decl(ty=Ty.INT, name=n, init=Call(recv=it, method="next")):
                out.append(SNext(n, it, h_out=self.fresh_heap()))
            case Decl(ty=Ty.INT, name=n, init=init):
                if init is not None:
                    e = self.hoist(init, out, False)
                    out.append(SAssign(n, e))
            case Decl(ty=Ty.LIST, name=n, init=init):
                match init:
                    case None:
                        pass
                    case NewList():
                        out.append(SNewList(n, h_out=self.fresh_heap()))
                    case Var(name=src):
                        out.append(SAliasList(n, src, h_out=self.fresh_heap()))
                    case _:
                        raise AssertionError(init)
            case Decl(ty=Ty.ITER, name=n, init=init):
                match init:
                    case Call(recv=src, method="iterator"):
                        self.iter_sources[n] = src
                        out.append(SIterInit(n, src, h_out=self.fresh_heap()))
                    case _:
                        raise UnsupportedConstruct(
                            "iterators must be initialized with .iterator()",
                            s.pos[0], s.pos[1])
            case Assign(name=n, expr=expr):
                if self.types[n] is Ty.LIST:
                    match expr:
                        case NewList():
                            out.append(SNewList(n, h_out=self.fresh_heap()))
                        case Var(name=src):
                            out.append(SAliasList(n, src, h_out=self.fresh_heap()))
                        case _:
                            raise AssertionError(expr)
                elif isinstance(expr, Call) and expr.method == "next":
                    out.append(SNext(n, expr.recv, h_out=self.fresh_heap()))
                else:
                    e = self.hoist(expr, out, False)
                    out.append(SAssign(n, e))
            case CallStmt(call=Call(recv=recv, method=m, args=args)):
                match m:
                    case "next":
                        out.append(SNext(None, recv, h_out=self.fresh_heap()))
                    case "remove":
                        out.append(SRemove(recv, h_out=self.fresh_heap()))
                    case "add" if len(args) == 1:
                        v = self.hoist(args[0], out, False)
                        out.append(SAddLast(recv, v, h_out=self.fresh_heap()))
                    case "add":
                        i = self.hoist(args[0], out, False)
                        v = self.hoist(args[1], out, False)
                        out.append(SAddAt(recv, i, v, h_out=self.fresh_heap()))
                    case "set":
                        i = self.hoist(args[0], out, False)
                        v = self.hoist(args[1], out, False)
                        out.append(SSet(recv, i, v, h_out=self.fresh_heap()))
                    case "clear":
                        out.append(SClear(recv, h_out=self.fresh_heap()))
                    case "iterator":
                        pass  # allocated and discarded: unobservable
                    case _:
                        e = self.hoist(
                            Call(recv=recv, method=m, args=args), out, False)
                        out.append(SEval(e))
            case Block(stmts=stmts):
                for inner in stmts:
                    self.stmt(inner, out, parent)
            case If(cond=c, then=t, els=e):
                cond = self.hoist(c, out, False)
                then_seq = tuple(self.seq([t], parent))
                els_seq = tuple(self.seq([e], parent)) if e else ()
                out.append(SIf(cond, then_seq, els_seq))
            case While(cond=c, body=b):
                cond = self.pure_cond(c, "while")
                self._loop(cond, b.stmts, (), parent, out)
            case For(init=init, cond=c, update=u, body=b):
                if init is not None:
                    self.stmt(init, out, parent)
                cond = self.pure_cond(c, "for")
                update = [u] if u is not None else []
                self._loop(cond, b.stmts, update, parent, out)
            case Break():
                out.append(SBreak())
            case Continue():
                out.append(SContinue())
            case Return():
                out.append(SReturn())
            case _:
                raise AssertionError(f"statement not lowerable: {s!r}")

    def _loop(self, cond: IExpr, body_stmts, update_stmts, parent, out) -> None:
        loop_id = self.loop_n
        self.loop_n += 1
        body = tuple(self.seq(body_stmts, parent=loop_id))
        update = tuple(self.seq(update_stmts, parent=loop_id))
        cuts = self._detect_cuts(cond, body + update)
        info = LoopInfo(id=loop_id, parent=parent, cuts=cuts)
        self.loops.append(info)
        out.append(SWhile(info, cond, body, update))

    # -- cut detection -------------------------------------------------------

    def _detect_cuts(self, cond: IExpr, body) -> tuple[CutRef, ...]:
        cuts: list[CutRef] = []
        seen: set[str] = set()

        def add(kind: str, var: str, lst: str) -> None:
            if var not in seen:
                seen.add(var)
                cuts.append(CutRef(kind, var, lst))

        for atom in _conjuncts(cond):
            match atom:
                case IHasNext(iter=it):
                    add("iterator", it, self.iter_sources[it])
                case IBin(op="<" | "<=", left=IVar(name=v), right=rhs) if (
                        self.types.get(v) is Ty.INT):
                    lst = _first_size_list(rhs)
                    if lst is not None:
                        add("index", v, lst)
                case _:
                    pass

        def scan(stmts):
            for s in stmts:
                match s:
                    case SNext(iter=it):
                        add("iterator", it, self.iter_sources[it])
                    case SIf(then=t, els=e):
                        scan(t)
                        scan(e)
                    case SWhile(body=b, update=u):
                        scan(b)
                        scan(u)
                    case _:
                        pass

        scan(body)
        return tuple(cuts)


def _conjuncts(e: IExpr) -> list[IExpr]:
    if isinstance(e, IBin) and e.op == "&&":
        return _conjuncts(e.left) + _conjuncts(e.right)
    return [e]


def _first_size_list(e: IExpr) -> str | None:
    match e:
        case ISize(list=l):
            return l
        case IUn(operand=x):
            return _first_size_list(x)
        case IBin(left=l, right=r):
            return _first_size_list(l) or _first_size_list(r)
        case IGet(index=i):
            return _first_size_list(i)
        case _:
            return None
