"""MiniJ abstract syntax, parser, and pretty printer.

One method per file, `void` only. Scalars are 32-bit ints; the only reference
types are List<Integer> and Iterator<Integer>. The parser normalizes as it
goes: compound assignments and ++/-- are rewritten to plain assignments,
loop/branch bodies are wrapped in blocks (except `else if` chains), and
enhanced-for loops are desugared to explicit iterator loops with a fresh
iterator name. Pretty-printing a parsed program therefore re-parses to an
identical tree (positions excluded from equality).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import MiniJSyntaxError, UnsupportedConstruct
from .lexer import Token, tokenize


class Ty(enum.Enum):
    INT = "int"
    LIST = "List<Integer>"
    ITER = "Iterator<Integer>"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


# Methods admitted by the call production, by receiver type.
LIST_METHODS = {"iterator", "add", "get", "set", "size", "clear"}
ITER_METHODS = {"hasNext", "next", "remove"}
METHODS = LIST_METHODS | ITER_METHODS

Pos = tuple[int, int]


def _pos() -> Pos:
    return (0, 0)


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # "!" | "-"
    operand: "Expr"
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Call:
    recv: str
    method: str
    args: tuple["Expr", ...]
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class NewList:
    pos: Pos = field(default_factory=_pos, compare=False)


Expr = Union[IntLit, Var, Unary, Binary, Call, NewList]


@dataclass(frozen=True)
class Decl:
    ty: Ty
    name: str
    init: Optional[Expr]
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class CallStmt:
    call: Call
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Block:
    stmts: tuple["Stmt", ...]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    els: Optional["Stmt"]


@dataclass(frozen=True)
class While:
    cond: Expr
    body: Block


@dataclass(frozen=True)
class For:
    init: Optional["Stmt"]  # Decl or Assign
    cond: Expr
    update: Optional["Stmt"]  # Assign or CallStmt
    body: Block


@dataclass(frozen=True)
class Break:
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Continue:
    pos: Pos = field(default_factory=_pos, compare=False)


@dataclass(frozen=True)
class Return:
    expr: Optional[Expr]
    pos: Pos = field(default_factory=_pos, compare=False)


Stmt = Union[Decl, Assign, CallStmt, Block, If, While, For, Break, Continue, Return]


@dataclass(frozen=True)
class MiniJProgram:
    name: str
    params: tuple[tuple[str, Ty], ...]
    body: Block


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise MiniJSyntaxError(f"unexpected {t.text!r}", t.line, t.col, (want,))
        return self.next()

    def fail_unsupported(self, message: str) -> None:
        t = self.peek()
        raise UnsupportedConstruct(message, t.line, t.col)

    # -- types ------------------------------------------------------------

    def at_type(self) -> bool:
        t = self.peek()
        if t.kind == "kw" and t.text == "int":
            return True
        return t.kind == "ident" and t.text in ("List", "Iterator") and self.peek(1).kind == "<"

    def parse_type(self) -> Ty:
        t = self.peek()
        if t.kind == "kw" and t.text == "int":
            self.next()
            return Ty.INT
        if t.kind == "ident" and t.text in ("List", "Iterator"):
            head = self.next().text
            self.expect("<")
            arg = self.expect("ident")
            if arg.text != "Integer":
                raise UnsupportedConstruct(
                    f"only Integer element type is supported, not {arg.text}", arg.line, arg.col
                )
            self.expect(">")
            return Ty.LIST if head == "List" else Ty.ITER
        raise MiniJSyntaxError(f"expected a type, found {t.text!r}", t.line, t.col,
                               ("int", "List<Integer>", "Iterator<Integer>"))

    # -- program ----------------------------------------------------------

    def parse_program(self) -> MiniJProgram:
        t = self.peek()
        if not self.at("kw", "void"):
            if self.at_type() or (t.kind == "ident" and self.peek(1).kind == "ident"):
                self.fail_unsupported("methods must be declared void")
            self.expect("kw", "void")
        self.next()
        name = self.expect("ident").text
        self.expect("(")
        params: list[tuple[str, Ty]] = []
        if not self.at(")"):
            while True:
                ty = self.parse_type()
                if ty is Ty.ITER:
                    self.fail_unsupported("iterator parameters are not supported")
                pname = self.expect("ident").text
                params.append((pname, ty))
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        body = self.parse_block()
        self.expect("eof")
        prog = MiniJProgram(name, tuple(params), body)
        return _desugar_foreach(prog)

    # -- statements -------------------------------------------------------

    def parse_block(self) -> Block:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.at("eof"):
                t = self.peek()
                raise MiniJSyntaxError("unexpected end of input", t.line, t.col, ("}",))
            stmts.append(self.parse_stmt())
        self.expect("}")
        return Block(tuple(stmts))

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "{":
            return self.parse_block()
        if t.kind == "kw":
            match t.text:
                case "if":
                    return self.parse_if()
                case "while":
                    return self.parse_while()
                case "for":
                    return self.parse_for()
                case "break":
                    self.next()
                    self.expect(";")
                    return Break(pos=(t.line, t.col))
                case "continue":
                    self.next()
                    self.expect(";")
                    return Continue(pos=(t.line, t.col))
                case "return":
                    self.next()
                    expr = None if self.at(";") else self.parse_expr()
                    self.expect(";")
                    return Return(expr, pos=(t.line, t.col))
                case "int":
                    s = self.parse_decl()
                    self.expect(";")
                    return s
                case "new":
                    raise MiniJSyntaxError("expression is not a statement", t.line, t.col)
        if self.at_type():
            s = self.parse_decl()
            self.expect(";")
            return s
        if t.kind == "ident" and self.peek(1).kind == "ident":
            self.fail_unsupported(f"unknown type {t.text!r}")
        if t.kind == "ident" or t.kind in ("++", "--"):
            s = self.parse_assign_or_call()
            self.expect(";")
            return s
        raise MiniJSyntaxError(f"unexpected {t.text!r}", t.line, t.col, ("statement",))

    def parse_decl(self) -> Decl:
        t = self.peek()
        ty = self.parse_type()
        name_tok = self.expect("ident")
        init = None
        if self.at("="):
            self.next()
            init = self.parse_expr()
        if self.at(","):
            self.fail_unsupported("one declaration per statement")
        return Decl(ty, name_tok.text, init, pos=(t.line, t.col))

    def parse_assign_or_call(self) -> Stmt:
        t = self.peek()
        # ++i / --i
        if t.kind in ("++", "--"):
            op = self.next().kind
            name = self.expect("ident")
            var = Var(name.text, pos=(name.line, name.col))
            delta = Binary("+" if op == "++" else "-", var, IntLit(1), pos=(t.line, t.col))
            return Assign(name.text, delta, pos=(t.line, t.col))
        name = self.expect("ident")
        nt = self.peek()
        if nt.kind == ".":
            self.next()
            call = self.parse_call_on(name)
            return CallStmt(call, pos=(name.line, name.col))
        if nt.kind in ("++", "--"):
            self.next()
            var = Var(name.text, pos=(name.line, name.col))
            delta = Binary("+" if nt.kind == "++" else "-", var, IntLit(1), pos=(nt.line, nt.col))
            return Assign(name.text, delta, pos=(name.line, name.col))
        if nt.kind in ("+=", "-=", "*="):
            self.next()
            rhs = self.parse_expr()
            var = Var(name.text, pos=(name.line, name.col))
            expr = Binary(nt.kind[0], var, rhs, pos=(nt.line, nt.col))
            return Assign(name.text, expr, pos=(name.line, name.col))
        if nt.kind == "=":
            self.next()
            expr = self.parse_expr()
            return Assign(name.text, expr, pos=(name.line, name.col))
        raise MiniJSyntaxError(f"unexpected {nt.text!r}", nt.line, nt.col,
                               ("=", "+=", "-=", "++", "--", "."))

    def parse_call_on(self, recv: Token) -> Call:
        m = self.expect("ident")
        if m.text not in METHODS:
            raise UnsupportedConstruct(f"method {m.text!r} is not in the MiniJ subset",
                                       m.line, m.col)
        self.expect("(")
        args: list[Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.next()
                    continue
                break
        self.expect(")")
        if self.at("."):
            t = self.peek()
            raise UnsupportedConstruct("chained method calls are not supported", t.line, t.col)
        return Call(recv.text, m.text, tuple(args), pos=(recv.line, recv.col))

    def parse_if(self) -> If:
        self.expect("kw", "if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self._as_block(self.parse_stmt())
        els: Optional[Stmt] = None
        if self.at("kw", "else"):
            self.next()
            els = self.parse_stmt()
            if not isinstance(els, (Block, If)):
                els = Block((els,))
        return If(cond, then, els)

    def parse_while(self) -> While:
        self.expect("kw", "while")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        return While(cond, self._as_block(self.parse_stmt()))

    def parse_for(self) -> Stmt:
        self.expect("kw", "for")
        self.expect("(")
        # Enhanced form: for (int x : xs)
        if self.at("kw", "int") and self.peek(1).kind == "ident" and self.peek(2).kind == ":":
            self.next()
            var = self.expect("ident")
            self.expect(":")
            src = self.expect("ident")
            self.expect(")")
            body = self._as_block(self.parse_stmt())
            return _ForEach(var.text, src.text, body, pos=(var.line, var.col))
        init: Optional[Stmt] = None
        if not self.at(";"):
            if self.at_type():
                init = self.parse_decl()
            else:
                init = self.parse_assign_or_call()
                if not isinstance(init, Assign):
                    t = self.peek()
                    raise MiniJSyntaxError("for-initializer must be an assignment",
                                           t.line, t.col)
        self.expect(";")
        cond = self.parse_expr()
        self.expect(";")
        update: Optional[Stmt] = None
        if not self.at(")"):
            update = self.parse_assign_or_call()
        self.expect(")")
        return For(init, cond, update, self._as_block(self.parse_stmt()))

    @staticmethod
    def _as_block(s: Stmt) -> Block:
        return s if isinstance(s, Block) else Block((s,))

    # -- expressions -------------------------------------------------------

    _BIN_LEVELS = [["||"], ["&&"], ["==", "!="], ["<", "<=", ">", ">="],
                   ["+", "-"], ["*", "/", "%"]]

    def parse_expr(self, level: int = 0) -> Expr:
        if level == len(self._BIN_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        ops = self._BIN_LEVELS[level]
        while self.peek().kind in ops:
            t = self.next()
            right = self.parse_expr(level + 1)
            left = Binary(t.kind, left, right, pos=(t.line, t.col))
        return left

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t.kind == "!":
            self.next()
            return Unary("!", self.parse_unary(), pos=(t.line, t.col))
        if t.kind == "-":
            self.next()
            operand = self.parse_unary()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value, pos=(t.line, t.col))
            return Unary("-", operand, pos=(t.line, t.col))
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(int(t.text), pos=(t.line, t.col))
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "kw" and t.text == "new":
            self.next()
            head = self.expect("ident")
            if head.text != "ArrayList":
                raise UnsupportedConstruct(f"cannot allocate {head.text!r}", head.line, head.col)
            self.expect("<")
            if self.at("ident"):
                arg = self.next()
                if arg.text != "Integer":
                    raise UnsupportedConstruct("only Integer element type is supported",
                                               arg.line, arg.col)
            self.expect(">")
            self.expect("(")
            if not self.at(")"):
                self.fail_unsupported("ArrayList copy constructors are not supported")
            self.expect(")")
            return NewList(pos=(t.line, t.col))
        if t.kind == "ident":
            self.next()
            if self.at("."):
                self.next()
                return self.parse_call_on(t)
            return Var(t.text, pos=(t.line, t.col))
        raise MiniJSyntaxError(f"unexpected {t.text!r}", t.line, t.col, ("expression",))


# Transient node for enhanced-for; removed before parse() returns.
@dataclass(frozen=True)
class _ForEach:
    var: str
    src: str
    body: Block
    pos: Pos = field(default_factory=_pos, compare=False)


def _collect_names(node, acc: set[str]) -> None:
    if isinstance(node, MiniJProgram):
        acc.update(n for n, _ in node.params)
        _collect_names(node.body, acc)
    elif isinstance(node, Block):
        for s in node.stmts:
            _collect_names(s, acc)
    elif isinstance(node, Decl):
        acc.add(node.name)
    elif isinstance(node, _ForEach):
        acc.add(node.var)
        _collect_names(node.body, acc)
    elif isinstance(node, If):
        _collect_names(node.then, acc)
        if node.els is not None:
            _collect_names(node.els, acc)
    elif isinstance(node, While):
        _collect_names(node.body, acc)
    elif isinstance(node, For):
        if node.init is not None:
            _collect_names(node.init, acc)
        _collect_names(node.body, acc)


def _desugar_foreach(prog: MiniJProgram) -> MiniJProgram:
    used: set[str] = set()
    _collect_names(prog, used)
    counter = [0]

    def fresh() -> str:
        while True:
            name = f"it{counter[0]}"
            counter[0] += 1
            if name not in used:
                used.add(name)
                return name

    def rewrite(s: Stmt) -> Stmt:
        if isinstance(s, _ForEach):
            it = fresh()
            body = Block((Decl(Ty.INT, s.var, Call(it, "next", (), pos=s.pos), pos=s.pos),)
                         + rewrite_block(s.body).stmts)
            return Block((
                Decl(Ty.ITER, it, Call(s.src, "iterator", (), pos=s.pos), pos=s.pos),
                While(Call(it, "hasNext", (), pos=s.pos), body),
            ))
        if isinstance(s, Block):
            return rewrite_block(s)
        if isinstance(s, If):
            els = rewrite(s.els) if s.els is not None else None
            return If(s.cond, rewrite(s.then), els)
        if isinstance(s, While):
            return While(s.cond, rewrite_block(s.body))
        if isinstance(s, For):
            return For(s.init, s.cond, s.update, rewrite_block(s.body))
        return s

    def rewrite_block(b: Block) -> Block:
        return Block(tuple(rewrite(s) for s in b.stmts))

    return MiniJProgram(prog.name, prog.params, rewrite_block(prog.body))


def parse(source: str) -> MiniJProgram:
    """Parse MiniJ source text into an AST.

    Raises MiniJSyntaxError (with line/column and expected-token info) on
    malformed input and UnsupportedConstruct on recognizable Java that is
    outside the subset.
    """
    return _Parser(tokenize(source)).parse_program()


# --------------------------------------------------------------------------
# Pretty printer
# --------------------------------------------------------------------------

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}


def _fmt_expr(e: Expr, parent_prec: int = 0, right: bool = False) -> str:
    match e:
        case IntLit(value=v):
            return str(v)
        case Var(name=n):
            return n
        case NewList():
            return "new ArrayList<Integer>()"
        case Call(recv=r, method=m, args=args):
            return f"{r}.{m}({', '.join(_fmt_expr(a) for a in args)})"
        case Unary(op=op, operand=x):
            return f"{op}{_fmt_expr(x, 7)}"
        case Binary(op=op, left=l, right=rr):
            p = _PREC[op]
            text = f"{_fmt_expr(l, p)} {op} {_fmt_expr(rr, p, right=True)}"
            if p < parent_prec or (p == parent_prec and right):
                return f"({text})"
            return text
    raise AssertionError(f"unhandled expression {e!r}")


def _fmt_stmt(s: Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    match s:
        case Decl(ty=ty, name=n, init=init):
            if init is None:
                out.append(f"{pad}{ty.value} {n};")
            else:
                out.append(f"{pad}{ty.value} {n} = {_fmt_expr(init)};")
        case Assign(name=n, expr=e):
            out.append(f"{pad}{n} = {_fmt_expr(e)};")
        case CallStmt(call=c):
            out.append(f"{pad}{_fmt_expr(c)};")
        case Block(stmts=stmts):
            out.append(f"{pad}{{")
            for inner in stmts:
                _fmt_stmt(inner, indent + 1, out)
            out.append(f"{pad}}}")
        case If():
            _fmt_if(s, indent, out, lead="")
        case While(cond=c, body=b):
            out.append(f"{pad}while ({_fmt_expr(c)}) {{")
            for inner in b.stmts:
                _fmt_stmt(inner, indent + 1, out)
            out.append(f"{pad}}}")
        case For(init=init, cond=c, update=u, body=b):
            parts = []
            for piece in (init, u):
                if piece is None:
                    parts.append("")
                else:
                    one: list[str] = []
                    _fmt_stmt(piece, 0, one)
                    parts.append(one[0].rstrip(";"))
            out.append(f"{pad}for ({parts[0]}; {_fmt_expr(c)}; {parts[1]}) {{")
            for inner in b.stmts:
                _fmt_stmt(inner, indent + 1, out)
            out.append(f"{pad}}}")
        case Break():
            out.append(f"{pad}break;")
        case Continue():
            out.append(f"{pad}continue;")
        case Return(expr=e):
            out.append(f"{pad}return;" if e is None else f"{pad}return {_fmt_expr(e)};")
        case _:
            raise AssertionError(f"unhandled statement {s!r}")


def _fmt_if(s: If, indent: int, out: list[str], lead: str) -> None:
    pad = "  " * indent
    out.append(f"{pad}{lead}if ({_fmt_expr(s.cond)}) {{")
    assert isinstance(s.then, Block)
    for inner in s.then.stmts:
        _fmt_stmt(inner, indent + 1, out)
    if s.els is None:
        out.append(f"{pad}}}")
    elif isinstance(s.els, If):
        _fmt_if(s.els, indent, out, lead="} else ")
    else:
        out.append(f"{pad}}} else {{")
        assert isinstance(s.els, Block)
        for inner in s.els.stmts:
            _fmt_stmt(inner, indent + 1, out)
        out.append(f"{pad}}}")


def pretty_print(prog: MiniJProgram) -> str:
    params = ", ".join(f"{ty.value} {n}" for n, ty in prog.params)
    lines = [f"void {prog.name}({params}) {{"]
    for s in prog.body.stmts:
        _fmt_stmt(s, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"
