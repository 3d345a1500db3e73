"""Bounded pre-state universe.

All verification in this package is exhaustive checking over a finite
universe: every list parameter takes every value sequence up to a length
bound, every int parameter takes every value in the configured set, and —
when enabled — every aliasing pattern among list parameters is enumerated.

Enumeration order is part of the external contract (the first counterexample
must be stable across runs): values are ordered center-out (0, 1, -1, 2, -2,
…), lengths ascend, tuple positions vary rightmost-fastest, and earlier
parameters vary slowest. Alias patterns start from all-distinct and end at
all-shared, so counterexamples prefer unaliased states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterator

from .interp import ProgramState
from .ir import IRProgram
from .syntax import Ty


def zigzag(lo: int, hi: int) -> tuple[int, ...]:
    """Center-out ordering of the integers in [lo, hi]."""
    out: list[int] = []
    for m in range(0, max(abs(lo), abs(hi)) + 1):
        if m == 0:
            if lo <= 0 <= hi:
                out.append(0)
            continue
        if m <= hi:
            out.append(m)
        if -m >= lo:
            out.append(-m)
    return tuple(out)


@dataclass(frozen=True)
class Bounds:
    max_len: int = 4
    values: tuple[int, ...] = field(default_factory=lambda: zigzag(-3, 3))
    fuel: int = 10_000
    aliasing: bool = True

    @staticmethod
    def of(lo: int, hi: int, max_len: int = 4, fuel: int = 10_000,
           aliasing: bool = True) -> "Bounds":
        return Bounds(max_len=max_len, values=zigzag(lo, hi), fuel=fuel,
                      aliasing=aliasing)


def list_sequences(bounds: Bounds) -> Iterator[tuple[int, ...]]:
    """Every value sequence of length 0..max_len, shortest first."""
    for n in range(bounds.max_len + 1):
        yield from product(bounds.values, repeat=n)


def count_sequences(bounds: Bounds) -> int:
    v = len(bounds.values)
    return sum(v**n for n in range(bounds.max_len + 1))


def _partitions(n: int) -> list[tuple[int, ...]]:
    """Set partitions of n items as restricted-growth strings, ordered with
    the all-distinct pattern first and all-shared last."""
    out: list[tuple[int, ...]] = []

    def grow(prefix: list[int], used: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for b in range(used + 1):
            grow(prefix + [b], max(used, b + 1))

    grow([], 0)
    out.sort(key=lambda rgs: -len(set(rgs)))
    return out


def enumerate_vectors(k: int, bounds: Bounds) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All k-tuples of value sequences (no aliasing), earlier slots slowest."""
    yield from product(list_sequences(bounds), repeat=k)


def param_domains(p: IRProgram, bounds: Bounds) -> list[tuple]:
    """Per-parameter value domains in declaration order (distinct roots).

    List parameters range over all bounded sequences, int parameters over the
    value set. The list-sequence domain is materialized once so repeated
    passes share it.
    """
    seqs = None
    domains: list[tuple] = []
    for _, t in p.params:
        if t is Ty.LIST:
            if seqs is None:
                seqs = tuple(list_sequences(bounds))
            domains.append(seqs)
        else:
            domains.append(bounds.values)
    return domains


def enumerate_param_vectors(p: IRProgram, bounds: Bounds) -> Iterator[tuple]:
    """Distinct-root pre-state vectors aligned with p.params, earlier
    parameters slowest. This is the verification engine's enumeration."""
    return product(*param_domains(p, bounds))


def count_param_vectors(p: IRProgram, bounds: Bounds) -> int:
    n = 1
    for d in param_domains(p, bounds):
        n *= len(d)
    return n


def enumerate_states(p: IRProgram, bounds: Bounds,
                     aliasing: bool | None = None) -> Iterator[ProgramState]:
    """Pre-states for p's parameters in canonical order."""
    if aliasing is None:
        aliasing = bounds.aliasing
    list_params = [n for n, t in p.params if t is Ty.LIST]
    int_params = [n for n, t in p.params if t is Ty.INT]
    patterns = _partitions(len(list_params)) if aliasing and list_params \
        else [tuple(range(len(list_params)))]

    for rgs in patterns:
        blocks = max(rgs) + 1 if rgs else 0
        for seqs in product(list_sequences(bounds), repeat=blocks):
            for ints in product(bounds.values, repeat=len(int_params)):
                st = ProgramState()
                lids = [st.new_list(f"$block{b}", seqs[b]) for b in range(blocks)]
                for name, b in zip(list_params, rgs):
                    st.refs[name] = lids[b]
                for b in range(blocks):
                    del st.refs[f"$block{b}"]
                for name, v in zip(int_params, ints):
                    st.scalars[name] = v
                yield st
