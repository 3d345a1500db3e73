"""Static checks between parsing and lowering.

Resolves every name to a single method-wide binding (duplicate declarations
are rejected rather than scoped, which keeps definite-assignment simple and
matches the fragment's style), type-checks expressions and statements, and
runs a forward definite-assignment analysis so the interpreter never reads an
uninitialized variable.

Iterator discipline: an iterator variable is bound by exactly one
`.iterator()` call, at its declaration. Rebinding via plain assignment is
rejected; everything downstream (cut detection, invalidation tracking) relies
on the iterator-to-source-list map being static.
"""

from __future__ import annotations

from .errors import BindingError, TypeCheckError, UnsupportedConstruct
from .syntax import (
    Assign, Binary, Block, Break, Call, CallStmt, Continue, Decl, For, If,
    IntLit, MiniJProgram, NewList, Return, Ty, Unary, Var, While,
)

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1

# method -> (receiver type, arg types, result); "bool" and "void" are
# checker-internal types, never declarable.
_SIGS: dict[tuple[Ty, str, int], tuple[tuple[str, ...], str]] = {
    (Ty.LIST, "iterator", 0): ((), "iter"),
    (Ty.LIST, "add", 1): (("int",), "void"),
    (Ty.LIST, "add", 2): (("int", "int"), "void"),
    (Ty.LIST, "get", 1): (("int",), "int"),
    (Ty.LIST, "set", 2): (("int", "int"), "void"),
    (Ty.LIST, "size", 0): ((), "int"),
    (Ty.LIST, "clear", 0): ((), "void"),
    (Ty.ITER, "hasNext", 0): ((), "bool"),
    (Ty.ITER, "next", 0): ((), "int"),
    (Ty.ITER, "remove", 0): ((), "void"),
}

_TY_NAME = {Ty.INT: "int", Ty.LIST: "list", Ty.ITER: "iter"}


class CheckedInfo:
    """Result of check(): the method-wide name->type table."""

    def __init__(self, types: dict[str, Ty]):
        self.types = types


def check(prog: MiniJProgram) -> CheckedInfo:
    return _Checker(prog).run()


class _Checker:
    def __init__(self, prog: MiniJProgram):
        self.prog = prog
        self.types: dict[str, Ty] = {}

    def run(self) -> CheckedInfo:
        assigned: set[str] = set()
        for name, ty in self.prog.params:
            if name in self.types:
                raise BindingError(f"duplicate parameter '{name}'")
            self.types[name] = ty
            assigned.add(name)
        self.stmt_seq(self.prog.body.stmts, frozenset(assigned), 0)
        return CheckedInfo(self.types)

    # -- statements --------------------------------------------------------

    def stmt_seq(self, stmts, assigned: frozenset, depth: int) -> frozenset:
        for s in stmts:
            assigned = self.stmt(s, assigned, depth)
        return assigned

    def stmt(self, s, assigned: frozenset, depth: int) -> frozenset:
        match s:
            case Decl(ty=ty, name=name, init=init):
                if name in self.types:
                    raise BindingError(
                        f"duplicate declaration of '{name}'", s.pos[0], s.pos[1])
                if init is not None:
                    got = self.expr(init, assigned)
                    want = _TY_NAME[ty]
                    if got != want:
                        raise TypeCheckError(
                            f"cannot initialize {want} '{name}' from {got}",
                            s.pos[0], s.pos[1])
                elif ty is Ty.ITER:
                    raise BindingError(
                        f"iterator '{name}' must be bound at its declaration",
                        s.pos[0], s.pos[1])
                self.types[name] = ty
                return assigned | {name} if init is not None else assigned
            case Assign(name=name, expr=expr):
                ty = self.types.get(name)
                if ty is None:
                    raise BindingError(
                        f"assignment to undeclared variable '{name}'",
                        s.pos[0], s.pos[1])
                if ty is Ty.ITER:
                    raise BindingError(
                        f"iterator '{name}' may only be bound at its declaration",
                        s.pos[0], s.pos[1])
                got = self.expr(expr, assigned)
                if got != _TY_NAME[ty]:
                    raise TypeCheckError(
                        f"cannot assign {got} to {_TY_NAME[ty]} '{name}'",
                        s.pos[0], s.pos[1])
                return assigned | {name}
            case CallStmt(call=call):
                self.expr(call, assigned)
                return assigned
            case Block(stmts=stmts):
                return self.stmt_seq(stmts, assigned, depth)
            case If(cond=cond, then=then, els=els):
                self.require_bool(cond, assigned)
                a1 = self.stmt(then, assigned, depth)
                a2 = self.stmt(els, assigned, depth) if els else assigned
                return a1 & a2
            case While(cond=cond, body=body):
                self.require_bool(cond, assigned)
                self.stmt(body, assigned, depth + 1)
                return assigned  # zero iterations possible
            case For(init=init, cond=cond, update=update, body=body):
                a0 = self.stmt(init, assigned, depth) if init else assigned
                if cond is not None:
                    self.require_bool(cond, a0)
                else:
                    raise UnsupportedConstruct(
                        "for loop without a condition", s.pos[0], s.pos[1])
                a_body = self.stmt(body, a0, depth + 1)
                if update:
                    self.stmt(update, a_body, depth + 1)
                return a0
            case Break() | Continue():
                if depth == 0:
                    kw = "break" if isinstance(s, Break) else "continue"
                    raise BindingError(
                        f"'{kw}' outside of a loop", s.pos[0], s.pos[1])
                return assigned
            case Return(expr=expr):
                if expr is not None:
                    raise TypeCheckError(
                        "void method cannot return a value", s.pos[0], s.pos[1])
                return assigned
        raise AssertionError(f"unhandled statement {s!r}")

    # -- expressions --------------------------------------------------------

    def require_bool(self, e, assigned: frozenset) -> None:
        got = self.expr(e, assigned)
        if got != "bool":
            raise TypeCheckError(
                f"condition must be boolean, got {got}", e.pos[0], e.pos[1])

    def expr(self, e, assigned: frozenset) -> str:
        match e:
            case IntLit(value=v):
                if not (INT_MIN <= v <= INT_MAX):
                    raise TypeCheckError(
                        f"integer literal {v} out of range", e.pos[0], e.pos[1])
                return "int"
            case Var(name=name):
                ty = self.types.get(name)
                if ty is None:
                    raise BindingError(
                        f"use of undeclared variable '{name}'",
                        e.pos[0], e.pos[1])
                if name not in assigned:
                    raise BindingError(
                        f"variable '{name}' may be used before assignment",
                        e.pos[0], e.pos[1])
                return _TY_NAME[ty]
            case Unary(op=op, operand=x):
                got = self.expr(x, assigned)
                want = "bool" if op == "!" else "int"
                if got != want:
                    raise TypeCheckError(
                        f"operator '{op}' expects {want}, got {got}",
                        e.pos[0], e.pos[1])
                return want
            case Binary(op=op, left=l, right=r):
                lt = self.expr(l, assigned)
                rt = self.expr(r, assigned)
                if op in ("&&", "||"):
                    if lt != "bool" or rt != "bool":
                        raise TypeCheckError(
                            f"operator '{op}' expects booleans",
                            e.pos[0], e.pos[1])
                    return "bool"
                if op in ("==", "!=", "<", "<=", ">", ">="):
                    if lt != "int" or rt != "int":
                        raise TypeCheckError(
                            f"operator '{op}' compares ints, got {lt} and {rt}",
                            e.pos[0], e.pos[1])
                    return "bool"
                if lt != "int" or rt != "int":
                    raise TypeCheckError(
                        f"operator '{op}' expects ints, got {lt} and {rt}",
                        e.pos[0], e.pos[1])
                return "int"
            case NewList():
                return "list"
            case Call(recv=recv, method=method, args=args):
                rty = self.types.get(recv)
                if rty is None:
                    raise BindingError(
                        f"use of undeclared variable '{recv}'",
                        e.pos[0], e.pos[1])
                if recv not in assigned:
                    raise BindingError(
                        f"variable '{recv}' may be used before assignment",
                        e.pos[0], e.pos[1])
                sig = _SIGS.get((rty, method, len(args)))
                if sig is None:
                    raise TypeCheckError(
                        f"no method '{method}/{len(args)}' on {_TY_NAME[rty]}",
                        e.pos[0], e.pos[1])
                arg_tys, result = sig
                for a, want in zip(args, arg_tys):
                    got = self.expr(a, assigned)
                    if got != want:
                        raise TypeCheckError(
                            f"argument of '{method}' expects {want}, got {got}",
                            e.pos[0], e.pos[1])
                return result
        raise AssertionError(f"unhandled expression {e!r}")
