"""Compiled execution against the tree-walking interpreter and the oracle."""

import random
import time

import pytest

from streamify.checker import check
from streamify.errors import TimeoutExceeded
from streamify.fastexec import (
    compile_candidate,
    compile_ir,
    compile_term,
    compile_verifier,
    pipelines_equal,
    term_size_refs,
)
from streamify.interp import (
    E_ARITH,
    E_CONCUR,
    E_ILLEGAL,
    E_INDEX,
    E_NOSUCH,
    OK,
    OUT_OF_FUEL,
    ProgramState,
    run,
)
from streamify.lower import lower
from streamify.pipeline import const_term, identity_term, new_empty_term, parse_pipeline
from streamify.syntax import Ty, parse
from streamify.universe import Bounds, enumerate_param_vectors, param_domains

import oracle


def load(src: str):
    ast = parse(src)
    check(ast)
    return lower(ast)


def interp_outcome(p, st):
    status, scal, roots = st.canonical(p.output_scalars, p.output_lists)
    return (status, tuple(v for _, v in scal), tuple((c, vs) for _, c, vs in roots))


def random_inputs(p, rng):
    """(lists dict, scalars dict, positional args in declaration order)."""
    lists, scalars, args = {}, {}, []
    for name, ty in p.params:
        if ty is Ty.LIST:
            vals = tuple(rng.randrange(-3, 4) for _ in range(rng.randrange(0, 5)))
            lists[name] = vals
            args.append(list(vals))
        else:
            k = rng.randrange(-3, 4)
            scalars[name] = k
            args.append(k)
    return lists, scalars, args


def cand_args(p, vec):
    """Reorder a param vector into compile_candidate's lists-then-ints layout."""
    largs = [v for v, (_, ty) in zip(vec, p.params) if ty is Ty.LIST]
    iargs = [v for v, (_, ty) in zip(vec, p.params) if ty is Ty.INT]
    return largs + iargs


# --------------------------------------------------------------------------
# compile_ir vs the interpreter
# --------------------------------------------------------------------------


def test_compile_ir_matches_interp_on_corpus(corpus_programs):
    rng = random.Random(11)
    for name, (_, p) in sorted(corpus_programs.items()):
        f = compile_ir(p)
        for _ in range(60):
            lists, scalars, args = random_inputs(p, rng)
            st = run(p, ProgramState.make(lists, scalars=scalars))
            assert f(*args) == interp_outcome(p, st), (name, lists, scalars)


def test_compile_ir_matches_interp_on_aliased_params(corpus_programs):
    _, p = corpus_programs["sec4_sumskip.minij"]
    f = compile_ir(p)
    rng = random.Random(7)
    for _ in range(40):
        vals = tuple(rng.randrange(-2, 3) for _ in range(rng.randrange(0, 4)))
        st = run(p, ProgramState.make({"l": vals}, aliases={"p": "l"}))
        shared = list(vals)
        assert f(shared, shared) == interp_outcome(p, st), vals


FAULT_CASES = (
    ("void f(List<Integer> l) { int x = l.get(3); }", (), E_INDEX),
    ("void f(List<Integer> l) { l.set(2, 5); }", (), E_INDEX),
    ("void f(List<Integer> l) { l.add(2, 9); }", (), E_INDEX),
    ("void f(List<Integer> l) {\n"
     "  Iterator<Integer> it = l.iterator();\n"
     "  int v = it.next();\n"
     "}", (), E_NOSUCH),
    ("void f(List<Integer> l) {\n"
     "  Iterator<Integer> it = l.iterator();\n"
     "  while (it.hasNext()) {\n"
     "    int v = it.next();\n"
     "    l.add(1);\n"
     "  }\n"
     "}", (1,), E_CONCUR),
    ("void f(List<Integer> l) {\n"
     "  Iterator<Integer> it = l.iterator();\n"
     "  while (it.hasNext()) {\n"
     "    it.remove();\n"
     "  }\n"
     "}", (1,), E_ILLEGAL),
    ("void f(List<Integer> l) { int x = 10 / l.size(); }", (), E_ARITH),
    ("void f(List<Integer> l) { int x = 10 % l.size(); }", (), E_ARITH),
)


def test_compile_ir_fault_parity():
    for src, pre, want in FAULT_CASES:
        p = load(src)
        got = compile_ir(p)(list(pre))
        st = run(p, ProgramState.make({"l": pre}))
        assert st.status == want, src
        assert got == interp_outcome(p, st), src


def test_compile_ir_fuel_parity():
    p = load("void f(List<Integer> l) {\n"
             "  int i = 0;\n"
             "  while (i < 1) {\n"
             "    i = i * l.size();\n"
             "  }\n"
             "}")
    assert p.params == (("l", Ty.LIST),)
    got = compile_ir(p)([], _fuel=50)
    st = run(p, ProgramState.make({"l": ()}), fuel=50)
    assert st.status == OUT_OF_FUEL
    assert got == interp_outcome(p, st)


COUNT_ABOVE = """
void count(List<Integer> l, int limit) {
  int n = 0;
  Iterator<Integer> it = l.iterator();
  while (it.hasNext()) {
    int v = it.next();
    if (v > limit) {
      n = n + 1;
    }
  }
}
"""


def test_compile_ir_int_params():
    p = load(COUNT_ABOVE)
    f = compile_ir(p)
    rng = random.Random(3)
    for _ in range(50):
        vals = tuple(rng.randrange(-3, 4) for _ in range(rng.randrange(0, 5)))
        k = rng.randrange(-3, 4)
        st = run(p, ProgramState.make({"l": vals}, scalars={"limit": k}))
        assert f(list(vals), k) == interp_outcome(p, st)
        assert st.scalars["n"] == sum(1 for v in vals if v > k)


# --------------------------------------------------------------------------
# Term and candidate compilation
# --------------------------------------------------------------------------


def test_compile_term_matches_oracle():
    t = parse_pipeline("l.stream().filter(v -> v > 0).map(v -> 2 * v) => res")
    fn = compile_term(t)
    rng = random.Random(5)
    for _ in range(80):
        vals = tuple(rng.randrange(-4, 5) for _ in range(rng.randrange(0, 6)))
        want = oracle.o_map(oracle.o_filter(vals, t.stages[0].pred),
                            t.stages[1].mapper)
        assert fn(vals, {}) == want

    s = parse_pipeline("l.stream().reduce(0, (a, b) -> a + b) => sum")
    fs = compile_term(s)
    assert fs((1, 2, 3), {}) == 6
    assert fs((), {}) == 0


def test_compile_term_memo_keyed_on_sizes():
    t = parse_pipeline("p.stream().skip(l.size()) => p")
    assert term_size_refs(t) == ("l",)
    fn = compile_term(t)
    assert fn((1, 2, 3), {"l": 1, "p": 3}) == (2, 3)
    assert fn((1, 2, 3), {"l": 2, "p": 3}) == (3,)
    assert fn((1, 2, 3), {"l": 1, "p": 3}) == (2, 3)


def test_compile_candidate_matches_original_on_fig3(corpus_programs):
    _, p = corpus_programs["fig3.minij"]
    f = compile_ir(p)
    terms = {
        "res": parse_pipeline(
            "l.stream().filter(v -> v > 0).map(v -> 2 * v) => res"),
        "l": identity_term("l"),
    }
    g = compile_candidate(p, terms)
    for vec in enumerate_param_vectors(p, Bounds.of(-2, 2, max_len=3)):
        args = [list(v) for v in vec]
        assert f(*args) == g(*vec)


def test_compile_candidate_missing_term_means_unchanged(corpus_programs):
    _, p = corpus_programs["sec4_sumskip.minij"]
    f = compile_ir(p)
    terms = {
        "sum": parse_pipeline("l.stream().reduce(0, (a, b) -> a + b) => sum"),
        "p": parse_pipeline("p.stream().skip(l.size()) => p"),
        # no term for l: claimed unchanged
    }
    g = compile_candidate(p, terms)
    for vec in enumerate_param_vectors(p, Bounds.of(-1, 1, max_len=2)):
        args = [list(v) for v in vec]
        assert f(*args) == g(*cand_args(p, vec))


def test_compile_candidate_new_and_const_terms():
    p = load("void f(List<Integer> l) {\n"
             "  List<Integer> res = new ArrayList<>();\n"
             "  int x = 5;\n"
             "}")
    f = compile_ir(p)
    g = compile_candidate(p, {
        "res": new_empty_term("res"),
        "x": const_term("x", 5),
        "l": identity_term("l"),
    })
    for vals in ((), (1,), (2, -1)):
        assert f(list(vals)) == g(vals)


# --------------------------------------------------------------------------
# Semantic equality of term sets
# --------------------------------------------------------------------------


def _tset(*texts):
    out = {}
    for text in texts:
        t = parse_pipeline(text)
        out[t.target] = t
    return out


def test_pipelines_equal_positive():
    b = Bounds.of(-2, 2, max_len=3)
    assert pipelines_equal(
        _tset("l.stream().skip(1).skip(1) => r"),
        _tset("l.stream().skip(2) => r"), b)
    assert pipelines_equal(
        _tset("l.stream().map(v -> 2 * v).map(v -> 2 * v) => r"),
        _tset("l.stream().map(v -> 4 * v) => r"), b)
    assert pipelines_equal(
        {"l": identity_term("l")},
        _tset("l.stream() => l"), b)


def test_pipelines_equal_negative():
    b = Bounds.of(-2, 2, max_len=3)
    assert not pipelines_equal(
        _tset("l.stream().filter(v -> v > 0) => r"),
        _tset("l.stream().filter(v -> v >= 0) => r"), b)
    assert not pipelines_equal(
        _tset("l.stream() => r"),
        _tset("l.stream() => q"), b)
    assert not pipelines_equal(
        _tset("p.stream().skip(l.size()) => p"),
        _tset("p.stream().skip(0) => p"), b)


# --------------------------------------------------------------------------
# Fused verification scans
# --------------------------------------------------------------------------


def reference_scan(p, terms, bounds):
    """Unfused replay: compiled original vs compiled candidate, state by state."""
    f = compile_ir(p)
    g = compile_candidate(p, terms)
    n = 0
    for vec in enumerate_param_vectors(p, bounds):
        n += 1
        args = [list(v) if isinstance(v, tuple) else v for v in vec]
        got = f(*args)
        if got[0] != OK or got != g(*cand_args(p, vec)):
            return (n, vec, got)
    return (n, None, None)


FIG3_GOOD = ("l.stream().filter(v -> v > 0).map(v -> 2 * v) => res",)
FIG3_BAD = ("l.stream().filter(v -> v >= 0).map(v -> 2 * v) => res",)


def test_scan_accepts_correct_terms(corpus_programs):
    _, p = corpus_programs["fig3.minij"]
    b = Bounds.of(-2, 2, max_len=3)
    terms = _tset(*FIG3_GOOD)
    terms["l"] = identity_term("l")
    scan = compile_verifier(p, terms)
    assert scan is not None
    assert scan(param_domains(p, b), b.fuel) == (156, None, None)
    assert reference_scan(p, terms, b) == (156, None, None)


def test_scan_finds_first_disagreement(corpus_programs):
    _, p = corpus_programs["fig3.minij"]
    b = Bounds.of(-2, 2, max_len=3)
    terms = _tset(*FIG3_BAD)
    terms["l"] = identity_term("l")
    scan = compile_verifier(p, terms)
    n, vec, got = scan(param_domains(p, b), b.fuel)
    # state 1 is l=(), state 2 is l=(0,): kept by >= 0, dropped by > 0
    assert (n, vec) == (2, ((0,),))
    assert got[0] == OK
    assert reference_scan(p, terms, b)[:2] == (2, ((0,),))


def test_scan_reports_original_fault():
    p = load("void f(List<Integer> l) { int x = l.get(0); }")
    terms = {
        "x": parse_pipeline("l.stream().reduce(0, (a, b) -> a + b) => x"),
        "l": identity_term("l"),
    }
    scan = compile_verifier(p, terms)
    n, vec, got = scan(param_domains(p, Bounds.of(-1, 1, max_len=2)), 10_000)
    assert (n, vec) == (1, ((),))
    assert got[0] == E_INDEX


def test_scan_int_param_domain():
    p = load(COUNT_ABOVE)
    terms = {
        "n": parse_pipeline(
            "l.stream().filter(v -> v > 0).map(v -> 1)"
            ".reduce(0, (a, b) -> a + b) => n"),
        "l": identity_term("l"),
    }
    scan = compile_verifier(p, terms)
    b = Bounds.of(-2, 2, max_len=2)
    n, vec, got = scan(param_domains(p, b), b.fuel)
    # agrees while limit == 0 is enumerated first; first split is
    # l=(0,), limit=-1 where the original counts 0 > -1
    assert (n, vec) == (8, ((0,), -1))
    assert got[0] == OK
    assert reference_scan(p, terms, b)[:2] == (8, ((0,), -1))


def test_scan_const_scalar_path(corpus_programs):
    _, p = corpus_programs["max_loop.minij"]
    terms = {"best": const_term("best", 0), "l": identity_term("l")}
    scan = compile_verifier(p, terms)
    b = Bounds.of(-2, 2, max_len=3)
    n, vec, got = scan(param_domains(p, b), b.fuel)
    assert (n, vec) == (3, ((1,),))

    neg = Bounds.of(-2, 0, max_len=3)
    assert scan(param_domains(p, neg), neg.fuel) == (40, None, None)


def test_scan_bails_out_to_generic_path(corpus_programs):
    alias_p = load("void f(List<Integer> l) {\n"
                   "  List<Integer> m = l;\n"
                   "  m.add(1);\n"
                   "}")
    assert compile_verifier(alias_p, {}) is None

    _, fig2 = corpus_programs["fig2_find.minij"]
    sourceless = parse_pipeline("l.stream().reduce(0, (a, b) -> a + b) => result")
    sourceless = type(sourceless)(target="result", source=None,
                                  terminal=sourceless.terminal)
    assert compile_verifier(fig2, {"result": sourceless,
                                   "data": identity_term("data")}) is None

    _, fig3 = corpus_programs["fig3.minij"]
    assert compile_verifier(fig3, {"res": identity_term("res"),
                                   "l": identity_term("l")}) is None


def test_scan_deadline(corpus_programs):
    _, p = corpus_programs["sec4_sumskip.minij"]
    terms = {
        "sum": parse_pipeline("l.stream().reduce(0, (a, b) -> a + b) => sum"),
        "p": parse_pipeline("p.stream().skip(l.size()) => p"),
        "l": identity_term("l"),
    }
    scan = compile_verifier(p, terms)
    with pytest.raises(TimeoutExceeded):
        scan(param_domains(p, Bounds.of(-3, 3, max_len=4)), 10_000,
             time.monotonic() - 1.0)
