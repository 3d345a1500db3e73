"""Candidates, verification conditions, and the two bounded checkers."""

import json
import time

import pytest

from streamify.checker import check
from streamify.errors import NotRefactorableError, ShapeMismatch, TimeoutExceeded
from streamify.fastexec import compile_ir
from streamify.interp import E_INDEX, ProgramState, run
from streamify.ir import CutRef
from streamify.lower import lower
from streamify.pipeline import identity_term, new_empty_term, parse_pipeline
from streamify.syntax import parse
from streamify.universe import Bounds
from streamify.vcgen import (
    Candidate,
    Counterexample,
    VerifyResult,
    assigned_scalars,
    check_end_to_end,
    check_vcs,
    constructors_for_vector,
    cut_position,
    make_vcs,
    outcome_to_json,
    required_targets,
    state_from_vector,
    validate_candidate,
    verify,
)


def load(src: str):
    ast = parse(src)
    check(ast)
    return lower(ast)


def prog(corpus_programs, name):
    return corpus_programs[name][1]


def cand(*texts) -> Candidate:
    return Candidate(tuple(parse_pipeline(t) for t in texts))


FIG3_WIN = "l.stream().filter(v -> v > 0).map(v -> 2 * v) => res"
SEC4_SUM = "l.stream().reduce(0, (a, b) -> a + b) => sum"
SEC4_P = "p.stream().skip(l.size()) => p"


# --------------------------------------------------------------------------
# Candidate structure
# --------------------------------------------------------------------------


def test_candidate_parse_str_round_trip():
    text = (f"{FIG3_WIN}\n"
            "<unchanged> => p\n"
            "<new> => q\n"
            "<const 0> => s")
    c = Candidate.parse(text)
    assert len(c.terms) == 4
    assert str(c) == text
    assert Candidate.parse(str(c)) == c
    assert c.total_length == 2  # only real stages and terminals count


def test_pipeline_parse_errors():
    from streamify.errors import PipelineParseError

    cases = [
        ("res.sort()", "missing '=> target'"),
        ("l.stream().sorted() => ", "empty target"),
        ("stream() => l", r"expected '<source>\.stream\(\)'"),
        ("l.stream().sorted(3) => l", "sorted\\(\\) takes no arguments"),
        ("l.stream().reduce(1) => s", "identity, accumulator"),
        ("l.stream().reduce(x, (a, b) -> a + b) => s",
         "expected integer or <list>.size"),
        ("l.stream().reduce(l.size(), (a, b) -> a + b) => s",
         "identity must be an integer"),
        ("l.stream().reduce(0, (a, b) -> a - b) => s",
         "cannot parse accumulator"),
        ("l.stream().shuffle() => l", "unknown pipeline operator"),
        ("l.stream().filter(nope) => l", "expected 'v -> "),
        ("l.stream().filter(v -> v ~ 3) => l", "cannot parse predicate atom"),
        ("l.stream().map(v -> q) => l", "cannot parse mapper"),
        ("l.stream().skip(x) => l", "expected integer or <list>.size"),
        ("l.stream().filter((v -> v > 0) => l", "unbalanced parentheses"),
        ("l.stream().anyMatch(v -> v > 0).map(v -> 2 * v) => s",
         "stage after terminal"),
    ]
    for text, pattern in cases:
        with pytest.raises(PipelineParseError, match=pattern):
            parse_pipeline(text)

    with pytest.raises(PipelineParseError, match="^line 2:"):
        Candidate.parse(f"{FIG3_WIN}\nbroken line\n")


def test_candidate_term_lookup():
    c = Candidate.parse(f"{SEC4_SUM}\n<unchanged> => p")
    assert c.term_for("sum").terminal is not None
    assert c.term_for("p").unchanged
    assert c.term_for("ghost") is None
    assert c.post_terms().keys() == {"sum", "p"}


def test_required_targets(corpus_programs):
    assert required_targets(prog(corpus_programs, "fig3.minij")) == ("res",)
    assert required_targets(prog(corpus_programs, "sec4_sumskip.minij")) == \
        ("sum", "p")
    assert assigned_scalars(prog(corpus_programs, "max_loop.minij")) == ("best",)


def test_validate_candidate_taxonomy(corpus_programs):
    fig3 = prog(corpus_programs, "fig3.minij")
    sec4 = prog(corpus_programs, "sec4_sumskip.minij")

    validate_candidate(fig3, cand(FIG3_WIN))  # untouched l may stay implicit
    validate_candidate(fig3, cand(FIG3_WIN, "<unchanged> => l"))

    bad = [
        (fig3, cand(FIG3_WIN, FIG3_WIN), "two terms"),
        (fig3, cand(FIG3_WIN, "<new> => ghost"), "not a program output"),
        (fig3, cand("res.stream() => res"), "not a list parameter"),
        (fig3, cand("l.stream().reduce(0, (a, b) -> a + b) => res"),
         "scalar term for list output"),
        (sec4, cand("l.stream() => sum", SEC4_P), "list term for scalar"),
        (fig3, Candidate((identity_term("res"),)), "needs a pre-existing list"),
        (fig3, Candidate((identity_term("l"),)), "no term for output 'res'"),
        (sec4, cand(SEC4_SUM), "no term for output 'p'"),
    ]
    for p, c, msg in bad:
        with pytest.raises(ShapeMismatch, match=msg):
            validate_candidate(p, c)


def test_validate_rejects_cut_terms(corpus_programs):
    fig3 = prog(corpus_programs, "fig3.minij")
    t = parse_pipeline(FIG3_WIN)
    cut = type(t)(target=t.target, source=t.source, stages=t.stages,
                  source_end="it")
    with pytest.raises(ShapeMismatch, match="whole sources"):
        validate_candidate(fig3, Candidate((cut,)))


# --------------------------------------------------------------------------
# VC descriptors
# --------------------------------------------------------------------------


def test_make_vcs_loop_free():
    p = load("void f(List<Integer> l) {\n"
             "  List<Integer> res = new ArrayList<Integer>();\n"
             "}")
    vcs = make_vcs(p, Candidate((new_empty_term("res"),)))
    assert [(v.kind, v.loop_id) for v in vcs] == [("Exit", None)]


def test_make_vcs_single_loop(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    vcs = make_vcs(p, cand(FIG3_WIN))
    assert [(v.kind, v.loop_id) for v in vcs] == [
        ("Base", 0), ("Inductive", 0), ("Exit", 0)]
    assert "final state" in vcs[2].description


def test_make_vcs_nested_loops_sorted_by_id(corpus_programs):
    p = prog(corpus_programs, "appendixa_sort.minij")
    vcs = make_vcs(p, cand("l.stream().sorted() => l"))
    assert [(v.kind, v.loop_id) for v in vcs] == [
        ("Base", 0), ("Inductive", 0), ("Exit", 0),
        ("Base", 1), ("Inductive", 1), ("Exit", 1)]
    assert "re-establishes" in vcs[5].description


def test_make_vcs_validates(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    with pytest.raises(ShapeMismatch):
        make_vcs(p, Candidate(()))


# --------------------------------------------------------------------------
# Cut positions
# --------------------------------------------------------------------------


def head_positions(p, lists, pre_len_of):
    """cut_position of the top loop's first cut at every head arrival."""
    top = next(li for li in p.loops if li.parent is None)
    cut = top.cuts[0]
    pre = ProgramState.make(lists)
    pre_len = pre_len_of(lists)
    out = []

    def on_head(loop_id, st):
        if loop_id == top.id:
            out.append(cut_position(st, cut, pre_len))

    run(p, pre, on_loop_head=on_head)
    return out


def test_cut_position_iterator(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    assert head_positions(p, {"l": (5, -6, 7)}, lambda d: 3) == [0, 1, 2, 3]


def test_cut_position_survives_removal(corpus_programs):
    p = prog(corpus_programs, "fig4_removeneg.minij")
    assert head_positions(p, {"l": (-1, 2, -3)}, lambda d: 3) == [0, 1, 2, 3]


def test_cut_position_index(corpus_programs):
    p = prog(corpus_programs, "skip_limit.minij")
    assert head_positions(p, {"l": (5, 6, 7)}, lambda d: 3) == [0, 1, 2, 3]


def test_cut_position_clamps():
    st = ProgramState.make({}, scalars={"i": 7})
    assert cut_position(st, CutRef("index", "i", "l"), 2) == 2
    st.scalars["i"] = -4
    assert cut_position(st, CutRef("index", "i", "l"), 2) == 0
    assert cut_position(st, CutRef("index", "ghost", "l"), 2) == 0
    assert cut_position(st, CutRef("iterator", "it", "l"), 2) == 0


# --------------------------------------------------------------------------
# Derived invariants
# --------------------------------------------------------------------------


def test_inv_terms_cut_at_progress_refs(corpus_programs):
    fig3 = prog(corpus_programs, "fig3.minij")
    c = cand(FIG3_WIN, "<unchanged> => l")
    inv = c.inv_terms(fig3)
    assert set(inv) == {0}
    assert [t.source_end for t in inv[0]] == ["it", None]
    assert [t.unchanged for t in inv[0]] == [False, True]

    sec4 = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, SEC4_P)
    inv = c.inv_terms(sec4)
    assert [t.source_end for t in inv[0]] == ["it", "pit"]


def test_inv_terms_skip_nested_loops(corpus_programs):
    p = prog(corpus_programs, "appendixa_sort.minij")
    inv = cand("l.stream().sorted() => l").inv_terms(p)
    assert set(inv) == {0}
    assert inv[0][0].source_end == "i"


# --------------------------------------------------------------------------
# Counterexample plumbing
# --------------------------------------------------------------------------


def test_constructors_and_state_from_vector():
    p = load("void count(List<Integer> l, int limit) {\n"
             "  int n = 0;\n"
             "  Iterator<Integer> it = l.iterator();\n"
             "  while (it.hasNext()) {\n"
             "    int v = it.next();\n"
             "    if (v > limit) {\n"
             "      n = n + 1;\n"
             "    }\n"
             "  }\n"
             "}")
    vec = ((1, 2), -1)
    assert constructors_for_vector(p, vec) == (
        "new h l", "add h l 0 1", "add h l 1 2", "int limit -1")
    st = state_from_vector(p, vec)
    assert st.values("l") == (1, 2)
    assert st.scalars["limit"] == -1


def test_outcome_to_json_reports_aliases():
    p = load("void f(List<Integer> l) {\n"
             "  List<Integer> m = l;\n"
             "  m.add(1);\n"
             "}")
    out = compile_ir(p)([])
    assert outcome_to_json(p, out) == {
        "status": "ok",
        "scalars": {},
        "lists": {"l": [1], "m": [1]},
        "aliases": {"m": "l"},
    }


# --------------------------------------------------------------------------
# End-to-end checking
# --------------------------------------------------------------------------


def test_end_to_end_accepts_winner(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    r = check_end_to_end(p, cand(FIG3_WIN), Bounds.of(-2, 2, max_len=3))
    assert r == VerifyResult(ok=True, counterexample=None, states_checked=156)


def test_end_to_end_seed_rejection_golden(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    r = check_end_to_end(p, Candidate((new_empty_term("res"),)),
                         Bounds.of(-2, 2, max_len=3))
    assert not r.ok and r.states_checked == 3
    assert r.counterexample.vector == ((1,),)
    assert r.counterexample.to_json() == {
        "constructors": ["new h l", "add h l 0 1"],
        "failedVC": {"kind": "Exit", "loopId": 0},
        "expected": {"status": "ok", "scalars": {},
                     "lists": {"l": [1], "res": [2]}},
        "actual": {"status": "ok", "scalars": {},
                   "lists": {"l": [1], "res": []}},
    }
    assert json.loads(str(r.counterexample)) == r.counterexample.to_json()


def test_end_to_end_rejects_sum_only_claim(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, "<unchanged> => l", "<unchanged> => p")
    r = check_end_to_end(p, c, Bounds())
    assert not r.ok and r.states_checked == 2803
    cex = r.counterexample
    assert cex.vector == ((0,), (0,))
    assert cex.failed_vc == {"kind": "Exit", "loopId": 0}
    assert cex.expected["lists"]["p"] == []
    assert cex.actual["lists"]["p"] == [0]


def test_end_to_end_not_refactorable_on_fault():
    p = load("void f(List<Integer> l) { int x = l.get(0); }")
    c = cand("l.stream().reduce(0, (a, b) -> a + b) => x")
    with pytest.raises(NotRefactorableError) as ei:
        check_end_to_end(p, c, Bounds.of(-1, 1, max_len=2))
    assert ei.value.constructors == ("new h l",)
    assert ei.value.fault == E_INDEX


def test_end_to_end_deadline(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, SEC4_P)
    with pytest.raises(TimeoutExceeded):
        check_end_to_end(p, c, Bounds(), deadline=time.monotonic() - 1.0)


# --------------------------------------------------------------------------
# Invariant checking
# --------------------------------------------------------------------------


def test_check_vcs_accepts_winner(corpus_programs):
    p = prog(corpus_programs, "fig3.minij")
    r = check_vcs(p, cand(FIG3_WIN), Bounds.of(-2, 2, max_len=3))
    assert r.ok and r.states_checked == 156


def test_check_vcs_accepts_in_place_sort(corpus_programs):
    p = prog(corpus_programs, "appendixa_sort.minij")
    r = check_vcs(p, cand("l.stream().sorted() => l"),
                  Bounds.of(-1, 1, max_len=3))
    assert r.ok and r.states_checked == 40


def test_check_vcs_catches_sum_only_inductively(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, "<unchanged> => p", "<unchanged> => l")
    r = check_vcs(p, c, Bounds.of(-1, 1, max_len=2))
    assert not r.ok and r.states_checked == 15
    cex = r.counterexample
    assert cex.vector == ((0,), (0,))
    assert cex.failed_vc == {"kind": "Inductive", "loopId": 0}
    assert cex.expected == {"target": "p", "value": [0]}
    assert cex.actual == {"target": "p", "value": []}


def test_check_vcs_not_refactorable_on_fault():
    p = load("void f(List<Integer> l) { int x = l.get(0); }")
    c = cand("l.stream().reduce(0, (a, b) -> a + b) => x")
    with pytest.raises(NotRefactorableError) as ei:
        check_vcs(p, c, Bounds.of(-1, 1, max_len=2))
    assert ei.value.fault == E_INDEX


def test_check_vcs_deadline(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, SEC4_P)
    with pytest.raises(TimeoutExceeded):
        check_vcs(p, c, Bounds.of(-2, 2, max_len=3),
                  deadline=time.monotonic() - 1.0)


def test_verify_dispatches_on_mode(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, "<unchanged> => p", "<unchanged> => l")
    b = Bounds.of(-1, 1, max_len=2)
    assert verify(p, c, b).counterexample.failed_vc["kind"] == "Exit"
    assert verify(p, c, b, mode="invariants") \
        .counterexample.failed_vc["kind"] == "Inductive"


def test_modes_agree_on_winners(corpus_programs):
    p = prog(corpus_programs, "sec4_sumskip.minij")
    c = cand(SEC4_SUM, SEC4_P)
    b = Bounds.of(-1, 1, max_len=2)
    assert check_end_to_end(p, c, b).ok
    assert check_vcs(p, c, b).ok
