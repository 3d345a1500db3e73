"""Graph heaps and heap equivalence.

A heap is a finite graph of integer-valued nodes, each with at most one
successor, plus a set of named references into the graph. Lists are the
chains reachable from a reference; `None` plays the role of null. Heaps are
immutable: every "mutation" returns a fresh heap value.

Equivalence of two heaps over a set of shared roots is isomorphism of the
reachable subgraphs that respects root names. Because out-degree is at most
one and chains are acyclic, a canonical form is cheap: walk the roots in a
fixed order, number nodes in first-reachable order, and compare the numbered
graphs for plain equality. This catches everything isomorphism would — value
differences, length differences, and sharing/alias pattern differences, both
at the roots and interior (two roots converging on a shared tail).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import IllFormedSegment, MissingBinding


@dataclass(frozen=True)
class Node:
    value: int
    succ: Optional[int]


class Heap:
    """Immutable pointer graph. All mutators return new heaps."""

    __slots__ = ("refs", "nodes", "_next")

    def __init__(self, refs: dict[str, Optional[int]], nodes: dict[int, Node],
                 next_id: int):
        self.refs = refs
        self.nodes = nodes
        self._next = next_id

    # -- construction --------------------------------------------------------

    @staticmethod
    def empty() -> "Heap":
        return Heap({}, {}, 0)

    @staticmethod
    def from_lists(lists: dict[str, tuple[int, ...]],
                   aliases: dict[str, str] | None = None,
                   nulls: Iterable[str] = ()) -> "Heap":
        """Build a heap with one fresh chain per entry; aliases map extra
        names onto an existing entry's chain head."""
        h = Heap.empty()
        for name, values in lists.items():
            h, head = h.alloc_chain(values)
            h = h.set_ref(name, head)
        for name, target in (aliases or {}).items():
            h = h.set_ref(name, h.ref(target))
        for name in nulls:
            h = h.set_ref(name, None)
        return h

    def alloc(self, value: int, succ: Optional[int]) -> tuple["Heap", int]:
        nid = self._next
        nodes = dict(self.nodes)
        nodes[nid] = Node(value, succ)
        return Heap(self.refs, nodes, nid + 1), nid

    def alloc_chain(self, values: tuple[int, ...]) -> tuple["Heap", Optional[int]]:
        """Fresh null-terminated chain; returns (heap, head id or None)."""
        h: Heap = self
        head: Optional[int] = None
        for v in reversed(values):
            h, head = h.alloc(v, head)
        return h, head

    def set_ref(self, name: str, target: Optional[int]) -> "Heap":
        refs = dict(self.refs)
        refs[name] = target
        return Heap(refs, self.nodes, self._next)

    # -- access --------------------------------------------------------------

    def ref(self, name: str) -> Optional[int]:
        if name not in self.refs:
            raise MissingBinding(f"no reference named '{name}'")
        return self.refs[name]

    def value(self, nid: int) -> int:
        return self.nodes[nid].value

    def succ(self, nid: int) -> Optional[int]:
        return self.nodes[nid].succ

    def values_from(self, start: Optional[int],
                    end: Optional[int] = None) -> tuple[int, ...]:
        """Values along the chain from `start` up to (excluding) `end`.

        With end=None this is the whole chain. Raises IllFormedSegment if
        `end` is never reached (or on a cycle, which the invariants forbid).
        """
        out: list[int] = []
        cur = start
        seen = 0
        limit = len(self.nodes) + 1
        while cur != end:
            if cur is None or seen > limit:
                raise IllFormedSegment(
                    f"segment end not reachable from start (walked {out})")
            node = self.nodes[cur]
            out.append(node.value)
            cur = node.succ
            seen += 1
        return tuple(out)

    def list_values(self, name: str) -> tuple[int, ...]:
        return self.values_from(self.ref(name))

    # -- canonical form ------------------------------------------------------

    def canonical(self, roots: Iterable[str]) -> tuple:
        """Canonical serialization of the subheap reachable from `roots`.

        Two heaps are equivalent over `roots` iff their canonical forms are
        equal. Node numbering is first-reachable order, so the form is
        independent of internal node ids.
        """
        number: dict[int, int] = {}
        order: list[int] = []
        root_entries: list[tuple[str, Optional[int]]] = []
        for name in roots:
            cur = self.ref(name)
            first = None
            while cur is not None and cur not in number:
                number[cur] = len(order)
                order.append(cur)
                cur = self.nodes[cur].succ
            head = self.ref(name)
            first = None if head is None else number[head]
            root_entries.append((name, first))
        node_entries = tuple(
            (self.nodes[nid].value,
             None if self.nodes[nid].succ is None else number[self.nodes[nid].succ])
            for nid in order)
        return (tuple(root_entries), node_entries)

    def to_json(self, roots: Iterable[str]) -> dict:
        """Snapshot as {refs, nodes} with canonical node numbering."""
        root_entries, node_entries = self.canonical(roots)
        return {
            "refs": {name: nid for name, nid in root_entries},
            "nodes": [
                {"id": i, "value": v, "next": s}
                for i, (v, s) in enumerate(node_entries)
            ],
        }


def heap_equiv(h1: Heap, h2: Heap, roots: Iterable[str]) -> bool:
    roots = tuple(roots)
    return h1.canonical(roots) == h2.canonical(roots)
