"""The search grammar: every stage and terminal the synthesizer may use.

Tables are pure functions of the constant pool and the list-parameter names
(for size references), and their order is part of the determinism contract:
comparison atoms are operator-major over the center-out pool, predicates are
single atoms followed by unordered pairs, and stages go filter, map, skip,
limit, sorted. The identity map is excluded — a pipeline would never need
it, and leaving it in floods the space with no-ops.

Scalar results attach one terminal: reduce over an int-only identity pool,
min, max, or a quantifier over the same predicates.
"""

from __future__ import annotations

from .jst import Acc, CmpAtom, Mapper, ModAtom, Pred, SizeRef
from .pipeline import (Stage, StFilter, StLimit, StMap, StSkip, StSorted,
                       Terminal, TmExists, TmForall, TmMax, TmMin, TmReduce)
from .universe import zigzag

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
ACC_OPS = ("+", "min", "max", "*")
MOD_DIVISORS = (2, 3)


def default_pool(values: tuple[int, ...]) -> tuple[int, ...]:
    """Constant pool for a value range: the range widened by one on each
    side, so boundary predicates (v <= hi, v > lo) stay expressible."""
    lo = min(values)
    hi = max(values)
    return zigzag(lo - 1, hi + 1)


def atoms(pool: tuple[int, ...]) -> tuple:
    out: list = []
    for op in CMP_OPS:
        for c in pool:
            out.append(CmpAtom(op, c))
    for k in MOD_DIVISORS:
        for r in zigzag(-(k - 1), k - 1):
            out.append(ModAtom(k, r))
    return tuple(out)


def predicates(pool: tuple[int, ...]) -> tuple[Pred, ...]:
    """All conjunctions of one or two distinct atoms."""
    ats = atoms(pool)
    out = [Pred((a,)) for a in ats]
    for i in range(len(ats)):
        for j in range(i + 1, len(ats)):
            out.append(Pred((ats[i], ats[j])))
    return tuple(out)


def mappers(pool: tuple[int, ...],
            size_names: tuple[str, ...]) -> tuple[Mapper, ...]:
    offsets: tuple = pool + tuple(SizeRef(n) for n in size_names)
    out = []
    for a in pool:
        for b in offsets:
            if a == 1 and b == 0:
                continue  # identity map
            out.append(Mapper(a, b))
    return tuple(out)


def skip_counts(pool: tuple[int, ...],
                size_names: tuple[str, ...]) -> tuple:
    ns = tuple(n for n in pool if n >= 1)  # skip(0) is the identity
    return ns + tuple(SizeRef(n) for n in size_names)


def limit_counts(pool: tuple[int, ...],
                 size_names: tuple[str, ...]) -> tuple:
    ns = tuple(n for n in pool if n >= 0)  # limit(0) truncates to empty
    return ns + tuple(SizeRef(n) for n in size_names)


def stage_table(pool: tuple[int, ...],
                size_names: tuple[str, ...]) -> tuple[Stage, ...]:
    out: list[Stage] = []
    out.extend(StFilter(p) for p in predicates(pool))
    out.extend(StMap(m) for m in mappers(pool, size_names))
    out.extend(StSkip(n) for n in skip_counts(pool, size_names))
    out.extend(StLimit(n) for n in limit_counts(pool, size_names))
    out.append(StSorted())
    return tuple(out)


def terminal_table(pool: tuple[int, ...]) -> tuple[Terminal, ...]:
    out: list[Terminal] = []
    for v0 in pool:
        for op in ACC_OPS:
            out.append(TmReduce(v0, Acc(op)))
    out.append(TmMin())
    out.append(TmMax())
    preds = predicates(pool)
    out.extend(TmExists(p) for p in preds)
    out.extend(TmForall(p) for p in preds)
    return tuple(out)
