"""Counterexample-guided synthesis of pipeline candidates.

The loop: verify the current candidate over the bounded universe; on failure
keep the first failing pre-state as a counterexample and search for the
cheapest candidate consistent with every counterexample so far; repeat. The
seed is the identity candidate (scalars 0, fresh lists empty, in-place lists
untouched), so the first counterexamples capture what the program actually
computes.

Total candidate length runs on a schedule starting at 1 and incrementing
only when the enumerative search proves no consistent candidate of that
length exists, which makes the first verified candidate minimal by
construction.

Two searchers race cooperatively and deterministically: a bottom-up
enumerator that deduplicates stage sequences by their behavior on the
counterexample set (complete at each length), and a steady-state genetic
search over encoded candidates (fast on big spaces, never authoritative).
The race driver interleaves fixed quanta, enumerative first, so a tie goes
to the enumerative result and a run without the genetic searcher is
byte-identical whenever enumerative wins the race.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from math import ceil
from time import monotonic
from typing import Iterator, Optional, Union

from .errors import NotRefactorableError, TimeoutExceeded
from .fastexec import compile_ir
from .ir import IRProgram
from .jst import Acc, SizeRef
from .pipeline import (PipelineTerm, StFilter, StLimit, StMap, StSkip,
                       StSorted, TmExists, TmForall, TmMax, TmMin, TmReduce,
                       const_term, eval_stages_values, eval_terminal_values,
                       identity_term, new_empty_term)
from .space import (ACC_OPS, default_pool, limit_counts, mappers, predicates,
                    skip_counts, stage_table, terminal_table)
from .syntax import Ty
from .universe import Bounds
from .vcgen import (Candidate, Counterexample, required_targets, verify)

logger = logging.getLogger(__name__)

_HEARTBEAT = 512  # probes between cooperative yields


@dataclass(frozen=True)
class SearchConfig:
    max_pipeline_len: int = 5
    constant_pool: Optional[tuple[int, ...]] = None
    ga_population: int = 2000
    ga_replacement_rate: float = 0.15
    ga_mutation_rate: float = 0.01
    timeout_seconds: float = 300.0
    random_seed: int = 0
    ga_generation_budget: int = 60
    no_ga: bool = False

    def pool_for(self, bounds: Bounds) -> tuple[int, ...]:
        if self.constant_pool is not None:
            return self.constant_pool
        return default_pool(bounds.values)


class CexSet:
    """Ordered counterexample pre-states, deduplicated by vector."""

    def __init__(self):
        self.examples: list[Counterexample] = []
        self._seen: set = set()

    def add(self, cex: Counterexample) -> bool:
        if cex.vector in self._seen:
            return False
        self._seen.add(cex.vector)
        self.examples.append(cex)
        return True

    @property
    def vectors(self) -> tuple:
        return tuple(c.vector for c in self.examples)

    def __len__(self) -> int:
        return len(self.examples)


# --------------------------------------------------------------------------
# Counterexample views and memoized evaluation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _CexView:
    """One counterexample pre-state plus the original's outputs on it."""

    vector: tuple
    src_vals: dict            # list param -> pre values
    sizes: dict               # list param -> pre length
    expected_scalar: dict     # scalar output -> value
    expected_list: dict       # list output -> value tuple


def _make_view(p: IRProgram, orig, vector: tuple, fuel: int) -> _CexView:
    args = [list(v) if ty is Ty.LIST else v
            for (_, ty), v in zip(p.params, vector)]
    outcome = orig(*args, _fuel=fuel)
    src_vals = {n: tuple(v) for (n, ty), v in zip(p.params, vector)
                if ty is Ty.LIST}
    return _CexView(
        vector=vector,
        src_vals=src_vals,
        sizes={n: len(v) for n, v in src_vals.items()},
        expected_scalar=dict(zip(p.output_scalars, outcome[1])),
        expected_list={n: vals for n, (_, vals)
                       in zip(p.output_lists, outcome[2])},
    )


def _stage_refs(stage) -> tuple[str, ...]:
    match stage:
        case StMap(mapper=m) if isinstance(m.b, SizeRef):
            return (m.b.name,)
        case StSkip(n=n) | StLimit(n=n) if isinstance(n, SizeRef):
            return (n.name,)
        case _:
            return ()


class _Evaluator:
    """Stage/terminal application memoized on exactly what each op reads."""

    def __init__(self):
        self._stage: dict = {}
        self._term: dict = {}

    def apply_stage(self, stage, vals: tuple, sizes: dict) -> tuple:
        key = (stage, vals) + tuple(sizes[r] for r in _stage_refs(stage))
        hit = self._stage.get(key)
        if hit is None:
            hit = eval_stages_values((stage,), vals, {"sizes": sizes})
            self._stage[key] = hit
        return hit

    def apply_terminal(self, term, vals: tuple) -> int:
        key = (term, vals)
        hit = self._term.get(key)
        if hit is None:
            hit = eval_terminal_values(term, vals, {})
            self._term[key] = hit
        return hit

    def term_value(self, t: PipelineTerm, view: _CexView):
        if t.unchanged:
            return view.src_vals[t.target]
        if t.source is None:
            return t.terminal.value if t.terminal is not None else ()
        vals = view.src_vals[t.source]
        for st in t.stages:
            vals = self.apply_stage(st, vals, view.sizes)
        if t.terminal is not None:
            return self.apply_terminal(t.terminal, vals)
        return vals

    def matches(self, t: PipelineTerm, view: _CexView) -> bool:
        if t.target in view.expected_scalar:
            return self.term_value(t, view) == view.expected_scalar[t.target]
        return self.term_value(t, view) == view.expected_list[t.target]


# --------------------------------------------------------------------------
# Length compositions
# --------------------------------------------------------------------------


def _compositions(total: int, mins: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Length vectors summing to `total` with per-slot minimums, ascending
    lexicographic order (earlier outputs take short terms first)."""
    out: list[tuple[int, ...]] = []

    def grow(prefix: list[int], left: int) -> None:
        i = len(prefix)
        if i == len(mins):
            if left == 0:
                out.append(tuple(prefix))
            return
        rest_min = sum(mins[i + 1:])
        for k in range(mins[i], left - rest_min + 1):
            grow(prefix + [k], left - k)

    grow([], total)
    return out


# --------------------------------------------------------------------------
# Enumerative search
# --------------------------------------------------------------------------


class _Stream:
    """Incrementally materialized level of deduplicated stage sequences."""

    __slots__ = ("gen", "reps", "done")

    def __init__(self, gen):
        self.gen = gen
        self.reps: list = []
        self.done = False


class _Enumerative:
    """Complete bottom-up search, one instance per (counterexample set,
    total length) round. Yields None heartbeats, then the first consistent
    candidate; exhaustion (StopIteration) proves the length empty."""

    def __init__(self, p: IRProgram, views: list[_CexView], ev: _Evaluator,
                 stages: tuple, terminals: tuple):
        self.p = p
        self.views = views
        self.ev = ev
        self.stage_table = stages
        self.terminal_table = terminals
        self.list_params = tuple(n for n, ty in p.params if ty is Ty.LIST)
        self.targets = required_targets(p)
        self.scalar = {t: t in p.output_scalars for t in self.targets}
        self.mins = tuple(1 if self.scalar[t] else 0 for t in self.targets)
        self.streams: dict = {}
        self.first_memo: dict = {}
        self.ticks = 0

    # -- level streams -----------------------------------------------------

    def _fill(self, src: str, j: int):
        """Yield level-j reps (stages, behavior) in discovery order; None
        items are heartbeats. Behavior = value tuples across the cex set."""
        if j == 0:
            yield ((), tuple(v.src_vals[src] for v in self.views))
            return
        seen: set = set()
        for item in self._pull(src, j - 1):
            if item is None:
                yield None
                continue
            stages, beh = item
            for st in self.stage_table:
                self.ticks += 1
                if self.ticks % _HEARTBEAT == 0:
                    yield None
                nb = tuple(self.ev.apply_stage(st, v, view.sizes)
                           for v, view in zip(beh, self.views))
                if nb in seen:
                    continue
                seen.add(nb)
                yield (stages + (st,), nb)

    def _pull(self, src: str, j: int):
        """Iterate a level stream, sharing materialized reps across pulls."""
        key = (src, j)
        s = self.streams.get(key)
        if s is None:
            s = _Stream(self._fill(src, j))
            self.streams[key] = s
        i = 0
        while True:
            while i < len(s.reps):
                yield s.reps[i]
                i += 1
            if s.done:
                return
            try:
                item = next(s.gen)
            except StopIteration:
                s.done = True
                continue
            if item is None:
                yield None
            else:
                s.reps.append(item)

    # -- per-output first-consistent ----------------------------------------

    def _first_gen(self, target: str, k: int):
        views = self.views
        ev = self.ev
        if not self.scalar[target]:
            if k == 0:
                if target in self.p.fresh_lists:
                    t = new_empty_term(target)
                    ok = all(v.expected_list[target] == () for v in views)
                else:
                    t = identity_term(target)
                    ok = all(v.expected_list[target] == v.src_vals[target]
                             for v in views)
                return t if ok else None
            for src in self.list_params:
                for item in self._pull(src, k):
                    if item is None:
                        yield None
                        continue
                    stages, beh = item
                    if all(b == v.expected_list[target]
                           for b, v in zip(beh, views)):
                        return PipelineTerm(target=target, source=src,
                                            stages=stages)
            return None
        # scalar: k-1 stages plus one terminal
        for src in self.list_params:
            for item in self._pull(src, k - 1):
                if item is None:
                    yield None
                    continue
                stages, beh = item
                for term in self.terminal_table:
                    self.ticks += 1
                    if self.ticks % _HEARTBEAT == 0:
                        yield None
                    if all(ev.apply_terminal(term, b)
                           == v.expected_scalar[target]
                           for b, v in zip(beh, views)):
                        return PipelineTerm(target=target, source=src,
                                            stages=stages, terminal=term)
        return None

    def search(self, total_len: int):
        for comp in _compositions(total_len, self.mins):
            terms = []
            for target, k in zip(self.targets, comp):
                key = (target, k)
                if key in self.first_memo:
                    t = self.first_memo[key]
                else:
                    t = yield from self._first_gen(target, k)
                    self.first_memo[key] = t
                if t is None:
                    break
                terms.append(t)
            else:
                yield Candidate(tuple(terms))
                return


# --------------------------------------------------------------------------
# Genetic search
# --------------------------------------------------------------------------

_STAGE_KINDS = 5   # filter, map, skip, limit, sorted
_TERM_KINDS = 5    # reduce, min, max, exists, forall
_GENE_SPAN = 1 << 30


class _Genetic:
    """Steady-state GA over encoded candidates at one total length.

    Genome: [composition selector] then per output a source selector and
    `total_len` gene triples (opcode, lambda index, constant index), decoded
    with modular repair so every genome is a well-formed candidate. Fitness
    is the number of counterexamples matched on all outputs; a full-score
    genome is consistent and wins the race round. The budget bounds the
    generations; running out means no progress, never exhaustion.
    """

    def __init__(self, p: IRProgram, views: list[_CexView], ev: _Evaluator,
                 config: SearchConfig, pool: tuple[int, ...],
                 total_len: int, rng: random.Random):
        self.p = p
        self.views = views
        self.ev = ev
        self.config = config
        self.rng = rng
        self.total_len = total_len
        self.list_params = tuple(n for n, ty in p.params if ty is Ty.LIST)
        self.targets = required_targets(p)
        self.scalar = {t: t in p.output_scalars for t in self.targets}
        mins = tuple(1 if self.scalar[t] else 0 for t in self.targets)
        self.comps = _compositions(total_len, mins)
        self.preds = predicates(pool)
        self.maps = mappers(pool, self.list_params)
        self.skips = skip_counts(pool, self.list_params)
        self.limits = limit_counts(pool, self.list_params)
        self.pool = pool
        self.genome_len = 1 + len(self.targets) * (1 + 3 * total_len)

    def _decode_stage(self, op: int, lam: int, const: int):
        match op % _STAGE_KINDS:
            case 0:
                return StFilter(self.preds[lam % len(self.preds)])
            case 1:
                return StMap(self.maps[lam % len(self.maps)])
            case 2:
                return StSkip(self.skips[const % len(self.skips)])
            case 3:
                return StLimit(self.limits[const % len(self.limits)])
            case _:
                return StSorted()

    def _decode_terminal(self, op: int, lam: int, const: int):
        match op % _TERM_KINDS:
            case 0:
                return TmReduce(self.pool[const % len(self.pool)],
                                Acc(ACC_OPS[lam % len(ACC_OPS)]))
            case 1:
                return TmMin()
            case 2:
                return TmMax()
            case 3:
                return TmExists(self.preds[lam % len(self.preds)])
            case _:
                return TmForall(self.preds[lam % len(self.preds)])

    def decode(self, g: list[int]) -> Candidate:
        comp = self.comps[g[0] % len(self.comps)]
        pos = 1
        terms = []
        for target, k in zip(self.targets, comp):
            src = self.list_params[g[pos] % len(self.list_params)]
            genes = g[pos + 1:pos + 1 + 3 * self.total_len]
            pos += 1 + 3 * self.total_len
            if k == 0:
                terms.append(new_empty_term(target)
                             if target in self.p.fresh_lists
                             else identity_term(target))
                continue
            n_stages = k - 1 if self.scalar[target] else k
            stages = tuple(
                self._decode_stage(*genes[3 * i:3 * i + 3])
                for i in range(n_stages))
            terminal = None
            if self.scalar[target]:
                terminal = self._decode_terminal(
                    *genes[3 * n_stages:3 * n_stages + 3])
            terms.append(PipelineTerm(target=target, source=src,
                                      stages=stages, terminal=terminal))
        return Candidate(tuple(terms))

    def fitness(self, g: list[int]) -> int:
        cand = self.decode(g)
        n = 0
        for view in self.views:
            if all(self.ev.matches(t, view) for t in cand.terms):
                n += 1
        return n

    def _random_genome(self) -> list[int]:
        return [self.rng.randrange(_GENE_SPAN)
                for _ in range(self.genome_len)]

    def search(self):
        if not self.comps:
            return
        rng = self.rng
        goal = len(self.views)
        pop = [self._random_genome() for _ in range(self.config.ga_population)]
        fits = []
        for i, g in enumerate(pop):
            fits.append(self.fitness(g))
            if i % 64 == 0:
                yield None
            if fits[-1] == goal:
                yield self.decode(g)
                return
        replace_n = max(1, ceil(self.config.ga_replacement_rate * len(pop)))
        for _ in range(self.config.ga_generation_budget):
            children = []
            for _ in range(replace_n):
                a, b = rng.randrange(len(pop)), rng.randrange(len(pop))
                fit_p = pop[a] if fits[a] >= fits[b] else pop[b]
                c, d = rng.randrange(len(pop)), rng.randrange(len(pop))
                other = pop[c] if fits[c] >= fits[d] else pop[d]
                child = [fp if rng.random() < 0.75 else op
                         for fp, op in zip(fit_p, other)]
                for i in range(len(child)):
                    if rng.random() < self.config.ga_mutation_rate:
                        child[i] = rng.randrange(_GENE_SPAN)
                children.append(child)
            order = sorted(range(len(pop)), key=lambda i: (fits[i], i))
            for slot, child in zip(order, children):
                pop[slot] = child
                fits[slot] = self.fitness(child)
                if fits[slot] == goal:
                    yield self.decode(child)
                    return
            yield None
        # generation budget spent: no progress


# --------------------------------------------------------------------------
# The race
# --------------------------------------------------------------------------


def race_searches(searchers: list[tuple[str, Iterator, bool]],
                  quanta: Optional[dict[str, int]] = None,
                  deadline: Optional[float] = None
                  ) -> tuple[str, Optional[Candidate]]:
    """Interleave searcher generators with fixed quanta, in list order.

    Each searcher yields None heartbeats or a Candidate. The first candidate
    wins; list order breaks ties structurally (earlier searchers get their
    quantum first each round). A searcher marked complete proves the space
    empty when it stops, ending the race; incomplete searchers just drop
    out. Returns (winner name, candidate) or ("", None) on exhaustion.
    """
    quanta = quanta or {}
    alive = {name for name, _, _ in searchers}
    while alive:
        for name, gen, complete in searchers:
            if name not in alive:
                continue
            for _ in range(quanta.get(name, 8)):
                if deadline is not None and monotonic() > deadline:
                    raise TimeoutExceeded("search deadline passed")
                try:
                    item = next(gen)
                except StopIteration:
                    alive.discard(name)
                    if complete:
                        return ("", None)
                    break
                if item is not None:
                    return (name, item)
    return ("", None)


# --------------------------------------------------------------------------
# Results
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthesisStats:
    iterations: int
    counterexamples: int
    states_checked: int
    elapsed_seconds: float
    final_length: int
    winner_engine: str


@dataclass(frozen=True)
class Refactoring:
    candidate: Candidate
    stats: SynthesisStats
    cex_set: tuple[Counterexample, ...]

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class NoRefactoring:
    reason: str  # "timeout" | "notRefactorable" | "instructionSetExhausted"
    detail: str
    stats: SynthesisStats
    cex_set: tuple[Counterexample, ...]
    fault: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return False


SynthesisResult = Union[Refactoring, NoRefactoring]


# --------------------------------------------------------------------------
# The loop
# --------------------------------------------------------------------------


def seed_candidate(p: IRProgram) -> Candidate:
    terms = []
    for target in required_targets(p):
        if target in p.output_scalars:
            terms.append(const_term(target, 0))
        elif target in p.fresh_lists:
            terms.append(new_empty_term(target))
        else:
            terms.append(identity_term(target))
    return Candidate(tuple(terms))


def synthesize(p: IRProgram, bounds: Bounds,
               config: SearchConfig = SearchConfig(),
               mode: str = "equivalence") -> SynthesisResult:
    t0 = monotonic()
    deadline = t0 + config.timeout_seconds
    pool = config.pool_for(bounds)
    list_params = tuple(n for n, ty in p.params if ty is Ty.LIST)
    stages = stage_table(pool, list_params)
    terminals = terminal_table(pool)
    orig = compile_ir(p)
    rng = random.Random(config.random_seed)
    ev = _Evaluator()
    cexset = CexSet()
    views: list[_CexView] = []

    candidate = seed_candidate(p)
    engine = "seed"
    length = 1
    iteration = 0
    states = 0

    def stats() -> SynthesisStats:
        return SynthesisStats(
            iterations=iteration,
            counterexamples=len(cexset),
            states_checked=states,
            elapsed_seconds=monotonic() - t0,
            final_length=candidate.total_length,
            winner_engine=engine,
        )

    while True:
        iteration += 1
        try:
            res = verify(p, candidate, bounds, mode=mode, deadline=deadline)
        except TimeoutExceeded as e:
            logger.info("timed out verifying after %d iterations", iteration)
            return NoRefactoring("timeout", str(e), stats(),
                                 tuple(cexset.examples))
        except NotRefactorableError as e:
            logger.info("not refactorable: %s", e.fault)
            return NoRefactoring(
                "notRefactorable", str(e), stats(), tuple(cexset.examples),
                fault={"constructors": list(e.constructors),
                       "fault": e.fault})
        states += res.states_checked
        if res.ok:
            logger.info(
                "iteration %d: verified over %d states; total length %d",
                iteration, res.states_checked, candidate.total_length)
            return Refactoring(candidate, stats(), tuple(cexset.examples))

        if not cexset.add(res.counterexample):
            raise AssertionError(
                "verifier repeated a counterexample; consistency check "
                "and verifier disagree")
        views.append(_make_view(p, orig, res.counterexample.vector,
                                bounds.fuel))
        logger.info(
            "iteration %d: rejected after %d states (%s VC, loop %s); "
            "%d counterexample(s)",
            iteration, res.states_checked,
            res.counterexample.failed_vc.get("kind"),
            res.counterexample.failed_vc.get("loopId"),
            len(cexset))

        while True:
            if monotonic() > deadline:
                return NoRefactoring("timeout", "search deadline passed",
                                     stats(), tuple(cexset.examples))
            if length > config.max_pipeline_len:
                return NoRefactoring(
                    "instructionSetExhausted",
                    f"no candidate up to total length "
                    f"{config.max_pipeline_len} is consistent",
                    stats(), tuple(cexset.examples))
            enum = _Enumerative(p, views, ev, stages, terminals)
            searchers: list[tuple[str, Iterator, bool]] = [
                ("enumerative", enum.search(length), True)]
            if not config.no_ga:
                ga = _Genetic(p, views, ev, config, pool, length, rng)
                searchers.append(("ga", ga.search(), False))
            try:
                name, found = race_searches(searchers, deadline=deadline)
            except TimeoutExceeded as e:
                return NoRefactoring("timeout", str(e), stats(),
                                     tuple(cexset.examples))
            if found is not None:
                candidate = found
                engine = name
                logger.debug("length %d candidate via %s:\n%s",
                             length, name, candidate)
                break
            logger.info("length %d exhausted; extending the schedule",
                        length)
            length += 1
