"""Segment operators against the reference list oracle."""

from itertools import product

import pytest

from streamify.errors import IllFormedSegment, MissingBinding
from streamify.heap import Heap
from streamify.jst import (
    N_INF,
    P_INF,
    Acc,
    CmpAtom,
    JstOp,
    Mapper,
    ModAtom,
    Pred,
    SizeRef,
    eval_op,
    op_add,
    op_add_last,
    op_alias,
    op_concat,
    op_copy,
    op_equal_lists,
    op_exists,
    op_filter,
    op_forall,
    op_get,
    op_get_iterator,
    op_limit,
    op_map,
    op_max,
    op_min,
    op_new,
    op_reduce,
    op_remove,
    op_remove_val,
    op_set,
    op_size,
    op_skip,
    op_sorted,
    resolve,
)

import oracle

VALUES = (-2, -1, 0, 1, 2)


def small_sequences(max_len=3, values=VALUES):
    for n in range(max_len + 1):
        yield from product(values, repeat=n)


def heap_with_cut(vals, k):
    """One chain x, with y planted k nodes in; k == len means x-to-end."""
    h = Heap.from_lists({"x": vals})
    nid = h.ref("x")
    for _ in range(k):
        nid = h.succ(nid)
    return h.set_ref("y", nid)


def segments():
    """(heap, end-ref, full values, segment values) for every cut."""
    for vals in small_sequences():
        yield Heap.from_lists({"x": vals}), None, vals, vals
        for k in range(len(vals) + 1):
            yield heap_with_cut(vals, k), "y", vals, vals[:k]


PREDS = (
    Pred((CmpAtom(">", 0),)),
    Pred((ModAtom(2, 0),)),
    Pred((CmpAtom(">=", -1), CmpAtom("<", 2))),
)

MAPPERS = (Mapper(2, 0), Mapper(1, 1), Mapper(-1, 0), Mapper(0, 3))


# --------------------------------------------------------------------------
# Lambda leaves
# --------------------------------------------------------------------------


def test_cmp_atoms_exhaustive():
    for op in ("==", "!=", "<", "<=", ">", ">="):
        for c in range(-3, 4):
            a = CmpAtom(op, c)
            for v in range(-5, 6):
                assert a.test(v) == oracle.atom_holds(a, v), (op, c, v)


def test_mod_atom_uses_java_remainder():
    a = ModAtom(2, 1)
    assert a.test(3)
    assert not a.test(-3)  # Java: -3 % 2 == -1
    assert ModAtom(2, -1).test(-3)
    for k in (2, 3):
        for r in range(-(k - 1), k):
            at = ModAtom(k, r)
            for v in range(-7, 8):
                assert at.test(v) == oracle.atom_holds(at, v)


def test_mapper_wraps_to_32_bits():
    m = Mapper(2, 0)
    assert m.apply(2**30, {}) == -(2**31)
    assert Mapper(1, 1).apply(2**31 - 1, {}) == -(2**31)
    assert Mapper(3, -1).apply(5, {}) == 14


def test_mapper_resolves_size_refs():
    m = Mapper(1, SizeRef("l"))
    assert m.apply(4, {"sizes": {"l": 3}}) == 7
    with pytest.raises(MissingBinding):
        m.apply(4, {})
    assert resolve(5, {}) == 5


def test_acc_ops():
    assert Acc("+").apply(2**31 - 1, 1) == -(2**31)
    assert Acc("*").apply(3, -4) == -12
    assert Acc("min").apply(2, -5) == -5
    assert Acc("max").apply(2, -5) == 2


# --------------------------------------------------------------------------
# Frozen examples
# --------------------------------------------------------------------------


def test_filter_keeps_positives():
    h = Heap.from_lists({"l": (1, 0, -2)})
    h2 = op_filter(h, "l", None, Pred((CmpAtom(">", 0),)), "ret")
    assert h2.list_values("ret") == (1,)


def test_reduce_sums():
    h = Heap.from_lists({"l": (1, 2, 3)})
    assert op_reduce(h, "l", None, 0, Acc("+")) == 6


def test_sorted_orders():
    h = Heap.from_lists({"l": (3, 1, 2)})
    assert op_sorted(h, "l", None, "ret").list_values("ret") == (1, 2, 3)


def test_skip_drops_leading_elements():
    h = Heap.from_lists({"p": (5, 6, 7, 8)})
    assert op_skip(h, "p", None, 0, 3, "ret").list_values("ret") == (8,)


def test_empty_segment_sentinels():
    h = Heap.from_lists({"l": ()})
    assert op_min(h, "l", None) == P_INF == 2**63 - 1
    assert op_max(h, "l", None) == N_INF == -(2**63 - 1)


# --------------------------------------------------------------------------
# Agreement with the oracle over segments
# --------------------------------------------------------------------------


def test_filter_map_sorted_agree():
    for h, y, _, seg in segments():
        for p in PREDS:
            assert op_filter(h, "x", y, p, "r").list_values("r") == \
                oracle.o_filter(seg, p)
        for m in MAPPERS:
            assert op_map(h, "x", y, m, "r").list_values("r") == \
                oracle.o_map(seg, m)
        assert op_sorted(h, "x", y, "r").list_values("r") == \
            oracle.o_sorted(seg)


def test_skip_limit_agree():
    for h, y, _, seg in segments():
        for n in range(0, 5):
            assert op_skip(h, "x", y, 0, n, "r").list_values("r") == \
                oracle.o_skip(seg, n)
            assert op_limit(h, "x", y, n, "r").list_values("r") == \
                oracle.o_limit(seg, n)


def test_scalar_ops_agree():
    for h, y, _, seg in segments():
        assert op_size(h, "x", y) == oracle.o_size(seg)
        assert op_min(h, "x", y) == oracle.o_min(seg)
        assert op_max(h, "x", y) == oracle.o_max(seg)
        for p in PREDS:
            assert op_exists(h, "x", y, p) == oracle.o_exists(seg, p)
            assert op_forall(h, "x", y, p) == oracle.o_forall(seg, p)
        for v0 in (0, 1):
            for acc in ("+", "min", "max", "*"):
                assert op_reduce(h, "x", y, v0, Acc(acc)) == \
                    oracle.o_reduce(seg, v0, Acc(acc))
        for i in range(len(seg)):
            assert op_get(h, "x", y, i) == oracle.o_get(seg, i)


def test_mutator_ops_agree():
    for vals in small_sequences(max_len=2):
        h = Heap.from_lists({"x": vals})
        assert op_add_last(h, "x", 9).list_values("x") == \
            oracle.o_add_last(vals, 9)
        for i in range(len(vals) + 1):
            assert op_add(h, "x", i, 9).list_values("x") == \
                oracle.o_add(vals, i, 9)
        for i in range(len(vals)):
            assert op_set(h, "x", i, 9).list_values("x") == \
                oracle.o_set(vals, i, 9)
            assert op_remove(h, "x", i).list_values("x") == \
                oracle.o_remove(vals, i)
        for v in (-1, 0, 1):
            assert op_remove_val(h, "x", None, v, "r").list_values("r") == \
                oracle.o_remove_val(vals, v)


def test_copy_concat_equal_lists():
    for h, y, _, seg in segments():
        assert op_copy(h, "x", y, "r").list_values("r") == oracle.o_copy(seg)
    h = Heap.from_lists({"a": (1, 2), "b": (3,)})
    assert op_concat(h, "a", None, "b", None, "r").list_values("r") == (1, 2, 3)
    assert op_equal_lists(h, "a", None, h, "a", None)
    assert not op_equal_lists(h, "a", None, h, "b", None)


# --------------------------------------------------------------------------
# Heap discipline
# --------------------------------------------------------------------------


def test_constructive_ops_are_pure():
    h = Heap.from_lists({"x": (3, -1, 2)})
    before = h.list_values("x")
    for h2 in (
        op_filter(h, "x", None, PREDS[0], "r"),
        op_map(h, "x", None, MAPPERS[0], "r"),
        op_sorted(h, "x", None, "r"),
        op_limit(h, "x", None, 1, "r"),
    ):
        assert h.list_values("x") == before
        assert h2.list_values("x") == before


def test_skip_shares_til_end_but_copies_segments():
    h = Heap.from_lists({"x": (1, 2, 3)})
    shared = op_skip(h, "x", None, 0, 1, "r")
    # sharing: the result head is a node of the source chain
    assert shared.ref("r") == shared.succ(shared.ref("x"))

    h2 = heap_with_cut((1, 2, 3), 2)
    copied = op_skip(h2, "x", "y", 0, 1, "r")
    src_nodes = set()
    nid = copied.ref("x")
    while nid is not None:
        src_nodes.add(nid)
        nid = copied.succ(nid)
    assert copied.ref("r") not in src_nodes
    assert copied.list_values("r") == (2,)


def test_get_iterator_aliases_head():
    h = Heap.from_lists({"x": (4, 5)})
    h2 = op_get_iterator(h, "x", "it")
    assert op_alias(h2, "x", "it")
    assert h2.values_from(h2.ref("it")) == (4, 5)


def test_segment_errors():
    h = Heap.from_lists({"x": (1,), "z": (2,)})
    with pytest.raises(IllFormedSegment):
        op_copy(h, "x", "z", "r")
    with pytest.raises(MissingBinding):
        op_size(h, "ghost", None)
    with pytest.raises(IllFormedSegment):
        op_skip(h, "x", None, 0, -1, "r")
    with pytest.raises(IllFormedSegment):
        op_limit(h, "x", None, -2, "r")


# --------------------------------------------------------------------------
# Dispatch
# --------------------------------------------------------------------------


def test_eval_op_matches_direct_calls():
    h = Heap.from_lists({"x": (2, -1)})
    h2, res = eval_op(JstOp("filter", ("x", None, PREDS[0], "r")), h)
    assert res is None and h2.list_values("r") == (2,)
    _, total = eval_op(JstOp("reduce", ("x", None, 0, Acc("+"))), h)
    assert total == 1
    _, same = eval_op(JstOp("alias", ("x", "x")), h)
    assert same is True


def test_eval_op_resolves_size_refs():
    h = Heap.from_lists({"x": (7, 8, 9), "l": (0, 0)})
    env = {"sizes": {"l": 2}}
    h2, _ = eval_op(JstOp("skip", ("x", None, 0, SizeRef("l"), "r")), h, env)
    assert h2.list_values("r") == (9,)


def test_eval_op_rejects_unknown_opcode():
    with pytest.raises(MissingBinding):
        eval_op(JstOp("shuffle", ()), Heap.empty())
