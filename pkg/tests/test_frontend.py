"""Parser, static checks, and lowering."""

import pytest

from streamify.checker import check
from streamify.errors import (
    BindingError,
    MiniJSyntaxError,
    TypeCheckError,
    UnsupportedConstruct,
)
from streamify.ir import SAssign, SNext, SWhile, format_ir
from streamify.lower import lower
from streamify.syntax import (
    Block,
    Call,
    Decl,
    If,
    MiniJProgram,
    Ty,
    While,
    parse,
    pretty_print,
)

FIG3 = """
void posDouble(List<Integer> l) {
  List<Integer> res = new ArrayList<Integer>();
  Iterator<Integer> it = l.iterator();
  while (it.hasNext()) {
    int v = it.next();
    if (v > 0) {
      res.add(2 * v);
    }
  }
}
"""

FOREACH = """
void findFirstEven(List<Integer> data) {
  int result = 0;
  for (int el : data) {
    if (el % 2 == 0) {
      result = el;
      break;
    }
  }
}
"""


def load(src: str):
    ast = parse(src)
    check(ast)
    return ast, lower(ast)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------


def test_parse_shape():
    ast = parse(FIG3)
    assert isinstance(ast, MiniJProgram)
    assert ast.name == "posDouble"
    assert ast.params == (("l", Ty.LIST),)
    kinds = [type(s).__name__ for s in ast.body.stmts]
    assert kinds == ["Decl", "Decl", "While"]


def test_foreach_desugars_to_iterator_loop():
    ast = parse(FOREACH)
    # the sugar becomes a block scoping a generated iterator and a while
    flat = []
    for s in ast.body.stmts:
        flat.extend(s.stmts if isinstance(s, Block) else [s])
    loops = [s for s in flat if isinstance(s, While)]
    assert len(loops) == 1
    cond = loops[0].cond
    assert isinstance(cond, Call) and cond.method == "hasNext"
    decls = [s for s in flat if isinstance(s, Decl)]
    assert any(d.ty is Ty.ITER for d in decls)


def test_pretty_print_round_trip(corpus_sources):
    for name, src in corpus_sources:
        ast = parse(src)
        again = parse(pretty_print(ast))
        assert again == ast, name


def test_parse_error_carries_position():
    with pytest.raises(MiniJSyntaxError) as ei:
        parse("void f(List<Integer> l) {\n  int x = ;\n}")
    assert ei.value.line == 2


@pytest.mark.parametrize("snippet", [
    "void f() { int x = 1 }",
    "void f(List<Integer> l) { l.add(1); ",
    "void f(List<Integer> l) { /* open",
])
def test_parse_rejects_malformed(snippet):
    with pytest.raises(MiniJSyntaxError):
        parse(snippet)


def test_non_void_method_is_unsupported_java():
    with pytest.raises(UnsupportedConstruct):
        parse("int f(List<Integer> l) { }")


def test_line_comments_are_skipped():
    ast = parse("// header\nvoid f(List<Integer> l) {\n  // inner\n  l.clear();\n}")
    assert len(ast.body.stmts) == 1


# --------------------------------------------------------------------------
# Checking
# --------------------------------------------------------------------------


def test_duplicate_parameter_rejected():
    with pytest.raises(BindingError):
        check(parse("void f(List<Integer> l, List<Integer> l) { }"))


def test_undeclared_variable_rejected():
    with pytest.raises(BindingError):
        check(parse("void f(List<Integer> l) { x = 1; }"))


def test_duplicate_declaration_rejected():
    with pytest.raises(BindingError):
        check(parse("void f(List<Integer> l) { int x = 0; int x = 1; }"))


def test_type_error_list_in_arithmetic():
    with pytest.raises(TypeCheckError):
        check(parse("void f(List<Integer> l) { int x = l + 1; }"))


def test_iterator_rebind_rejected():
    src = """
    void f(List<Integer> l) {
      Iterator<Integer> it = l.iterator();
      it = l.iterator();
    }
    """
    with pytest.raises((BindingError, TypeCheckError, UnsupportedConstruct)):
        check(parse(src))


def test_unknown_method_rejected():
    with pytest.raises((TypeCheckError, UnsupportedConstruct, MiniJSyntaxError)):
        check(parse("void f(List<Integer> l) { l.shuffle(); }"))


def test_checker_accepts_corpus(corpus_sources):
    for name, src in corpus_sources:
        check(parse(src))


# --------------------------------------------------------------------------
# Lowering
# --------------------------------------------------------------------------


def test_lower_fig3_facts():
    _, p = load(FIG3)
    assert p.params == (("l", Ty.LIST),)
    assert p.fresh_lists == ("res",)
    assert p.mutated_lists == ()
    assert p.output_lists == ("l", "res")
    assert p.output_scalars == ()
    assert [li.id for li in p.loops] == [0]
    assert p.iter_sources == {"it": "l"}


def test_lower_hoists_next_inside_expression():
    src = """
    void f(List<Integer> l) {
      List<Integer> res = new ArrayList<Integer>();
      Iterator<Integer> it = l.iterator();
      while (it.hasNext()) {
        int tmp = it.next() * 2;
        res.add(tmp);
      }
    }
    """
    _, p = load(src)

    def find(stmts, found):
        for s in stmts:
            if isinstance(s, SWhile):
                find(s.body, found)
                find(s.update, found)
            elif isinstance(s, (SNext, SAssign)):
                found.append(s)
        return found

    kinds = [type(s).__name__ for s in find(p.body, [])]
    # next() lands in a temporary, then the arithmetic reads it
    assert "SNext" in kinds and "SAssign" in kinds


def test_next_under_short_circuit_rejected():
    src = """
    void f(List<Integer> l) {
      Iterator<Integer> it = l.iterator();
      while (it.hasNext() && it.next() > 0) {
        l.clear();
      }
    }
    """
    ast = parse(src)
    check(ast)
    with pytest.raises(UnsupportedConstruct):
        lower(ast)


def test_lower_loop_cuts():
    sources = dict(load_corpus())
    p = lower(parse(sources["skip_limit.minij"]))
    (li,) = p.loops
    assert [(c.kind, c.var, c.list) for c in li.cuts] == [("index", "i", "l")]

    p = lower(parse(sources["sec4_sumskip.minij"]))
    (li,) = p.loops
    assert {(c.kind, c.var, c.list) for c in li.cuts} == {
        ("iterator", "it", "l"), ("iterator", "pit", "p")}
    assert p.mutated_lists == ("p",)
    assert p.output_scalars == ("sum",)

    p = lower(parse(sources["appendixa_sort.minij"]))
    by_id = {li.id: li for li in p.loops}
    assert by_id[1].parent == 0 and by_id[0].parent is None
    assert p.mutated_lists == ("l",)


def test_var_type_and_loop_lookup():
    _, p = load(FIG3)
    assert p.var_type("l") is Ty.LIST
    assert p.var_type("v") is Ty.INT
    with pytest.raises(KeyError):
        p.var_type("ghost")
    assert p.loop_by_id(0).id == 0
    with pytest.raises(KeyError):
        p.loop_by_id(9)


def test_format_ir_mentions_loop_cuts():
    _, p = load(FIG3)
    text = format_ir(p)
    assert "loop0" in text and "iterator:it@l" in text


def load_corpus():
    from importlib import resources
    root = resources.files("streamify").joinpath("corpus")
    return sorted((e.name, e.read_text()) for e in root.iterdir()
                  if e.name.endswith(".minij"))
