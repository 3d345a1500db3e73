"""Command line driver: refactor one file, sweep a corpus, audit a pipeline.

Three subcommands share one knob set so every bound of the checked universe
is visible on the invocation line:

  streamify refactor FILE   synthesize, print, and write FILE's refactoring
  streamify corpus [DIR]    run every .minij file and tabulate outcomes
  streamify verify FILE PIPELINE   check a hand-written pipeline file

Exit codes: 0 when the command succeeded (refactored, corpus ran, pipeline
equivalent), 2 when the engine answered "no" (no refactoring, verification
failed), 1 for usage, parse, and I/O errors.

Reports serialize to JSON with --json. Timing fields make reports differ
across runs; --no-timing zeroes them so fixed-seed runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional

from .cegis import NoRefactoring, SearchConfig, SynthesisResult, synthesize
from .checker import check
from .codegen import emit, emit_pattern_baseline
from .errors import NotRefactorableError, StreamifyError
from .ir import IRProgram
from .lower import lower
from .pipeline import identity_term
from .syntax import MiniJProgram, parse, Ty
from .universe import Bounds
from .vcgen import Candidate, verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO = 2


# --------------------------------------------------------------------------
# Flags
# --------------------------------------------------------------------------


def _values_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..", 1)
        pair = (int(lo), int(hi))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected lo..hi, for example -3..3, got {text!r}")
    if pair[0] > pair[1]:
        raise argparse.ArgumentTypeError(f"empty value range {text!r}")
    return pair


def _add_common(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--timeout", type=float, default=300.0, metavar="S",
                    help="synthesis budget in seconds (default 300)")
    ap.add_argument("--max-list-len", type=int, default=4, metavar="N",
                    help="longest list in the checked universe (default 4)")
    ap.add_argument("--values", type=_values_range, default=(-3, 3),
                    metavar="LO..HI",
                    help="element value range in the universe (default -3..3)")
    ap.add_argument("--seed", type=int, default=0, metavar="U64",
                    help="seed for all randomized search (default 0)")
    ap.add_argument("--max-pipeline-len", type=int, default=5, metavar="N",
                    help="longest pipeline the search may try (default 5)")
    ap.add_argument("--no-ga", action="store_true",
                    help="disable the genetic searcher; enumerative only")
    ap.add_argument("--mode", choices=("equivalence", "invariants"),
                    default="equivalence",
                    help="verification mode (default equivalence)")
    ap.add_argument("--json", type=Path, default=None, metavar="PATH",
                    help="also write the machine-readable report to PATH")
    ap.add_argument("--no-timing", action="store_true",
                    help="zero elapsed-time fields in reports")
    ap.add_argument("-v", "--verbose", action="count", default=0,
                    help="log progress; repeat for debug detail")


def _bounds_of(args: argparse.Namespace) -> Bounds:
    lo, hi = args.values
    return Bounds.of(lo, hi, max_len=args.max_list_len)


def _config_of(args: argparse.Namespace) -> SearchConfig:
    return SearchConfig(max_pipeline_len=args.max_pipeline_len,
                        timeout_seconds=args.timeout, random_seed=args.seed,
                        no_ga=args.no_ga)


def _load(text: str) -> tuple[MiniJProgram, IRProgram]:
    ast = parse(text)
    check(ast)
    return ast, lower(ast)


def _write_json(path: Optional[Path], payload: dict) -> None:
    if path is not None:
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def _report(input_path: str, result: Optional[SynthesisResult],
            baseline: Optional[str], args: argparse.Namespace,
            java_text: Optional[str], error: Optional[str] = None) -> dict:
    lo, hi = args.values
    rep: dict = {
        "inputPath": input_path,
        "outcome": "error",
        "reason": None,
        "detail": error,
        "pipelineText": None,
        "javaText": None,
        "baselineText": baseline,
        "iterations": 0,
        "counterexampleCount": 0,
        "statesChecked": 0,
        "finalLength": None,
        "engine": None,
        "elapsedMs": 0,
        "boundsUsed": {"maxListLen": args.max_list_len, "values": [lo, hi]},
        "seed": args.seed,
        "mode": args.mode,
    }
    if result is not None:
        st = result.stats
        rep.update({
            "iterations": st.iterations,
            "counterexampleCount": st.counterexamples,
            "statesChecked": st.states_checked,
            "elapsedMs": 0 if args.no_timing else int(st.elapsed_seconds * 1000),
        })
        if result.ok:
            rep.update({
                "outcome": "refactored",
                "pipelineText": str(result.candidate),
                "javaText": java_text,
                "finalLength": st.final_length,
                "engine": st.winner_engine,
            })
        else:
            rep.update({
                "outcome": "baselineOnly" if baseline else "noRefactoring",
                "reason": result.reason,
                "detail": result.detail,
            })
            if result.fault is not None:
                rep["fault"] = result.fault
    return rep


# --------------------------------------------------------------------------
# refactor
# --------------------------------------------------------------------------


def cmd_refactor(args: argparse.Namespace) -> int:
    path: Path = args.file
    try:
        text = path.read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        ast, prog = _load(text)
    except StreamifyError as e:
        print(f"error: {path}: {e}", file=sys.stderr)
        return EXIT_ERROR

    baseline = emit_pattern_baseline(ast)
    result = synthesize(prog, _bounds_of(args), _config_of(args),
                        mode=args.mode)
    java_text = emit(result.candidate, prog) if result.ok else None
    rep = _report(str(path), result, baseline, args, java_text)
    _write_json(args.json, rep)

    base = path.with_suffix("")
    if baseline is None:
        base.with_suffix(".baseline.NOMATCH").write_text("")
    else:
        base.with_suffix(".baseline.java").write_text(baseline)

    elapsed = rep["elapsedMs"] / 1000.0
    if result.ok:
        print(f"{path}: refactored in {elapsed:.2f} s "
              f"({rep['iterations']} iterations, "
              f"{rep['counterexampleCount']} counterexamples, "
              f"engine {rep['engine']})")
        if args.emit in ("pipeline", "both"):
            print("pipeline:")
            for line in str(result.candidate).splitlines():
                print(f"  {line}")
        if args.emit in ("java", "both"):
            print("java:")
            for line in java_text.splitlines():
                print(f"  {line}")
        out = base.with_suffix(".refactored.java")
        out.write_text(java_text)
        print(f"wrote {out}")
        return EXIT_OK

    print(f"{path}: no refactoring ({result.reason}) after "
          f"{rep['iterations']} iterations: {result.detail}")
    if baseline is not None:
        print("pattern baseline matched; its output is unverified:")
        for line in baseline.splitlines():
            print(f"  {line}")
    return EXIT_NO


# --------------------------------------------------------------------------
# corpus
# --------------------------------------------------------------------------


def _bundled_corpus() -> list[tuple[str, str]]:
    root = resources.files("streamify").joinpath("corpus")
    out = []
    for entry in root.iterdir():
        if entry.name.endswith(".minij"):
            out.append((entry.name, entry.read_text()))
    return sorted(out)


def _corpus_row(job: tuple) -> dict:
    name, text, bounds, config, mode, no_timing = job
    row = {
        "file": name,
        "outcome": "error",
        "reason": None,
        "pipelineText": None,
        "baselineMatched": False,
        "finalLength": None,
        "engine": None,
        "iterations": 0,
        "counterexampleCount": 0,
        "elapsedMs": 0,
    }
    try:
        ast, prog = _load(text)
    except StreamifyError as e:
        row["reason"] = str(e)
        return row
    row["baselineMatched"] = emit_pattern_baseline(ast) is not None
    result = synthesize(prog, bounds, config, mode=mode)
    st = result.stats
    row.update({
        "iterations": st.iterations,
        "counterexampleCount": st.counterexamples,
        "elapsedMs": 0 if no_timing else int(st.elapsed_seconds * 1000),
    })
    if result.ok:
        row.update({"outcome": "refactored",
                    "pipelineText": str(result.candidate),
                    "finalLength": st.final_length,
                    "engine": st.winner_engine})
    else:
        row.update({"outcome": "noRefactoring", "reason": result.reason})
    return row


def cmd_corpus(args: argparse.Namespace) -> int:
    if args.dir is not None:
        try:
            files = sorted((f.name, f.read_text())
                           for f in args.dir.glob("*.minij"))
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_ERROR
    else:
        files = _bundled_corpus()

    bounds = _bounds_of(args)
    config = _config_of(args)
    jobs = [(name, text, bounds, config, args.mode, args.no_timing)
            for name, text in files]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_corpus_row, jobs))
    else:
        rows = [_corpus_row(j) for j in jobs]

    width = max([len(r["file"]) for r in rows], default=4)
    print(f"{'file':<{width}}  {'outcome':<13} {'len':>3}  {'time':>8}  "
          f"{'engine':<11}  baseline")
    for r in rows:
        length = "-" if r["finalLength"] is None else str(r["finalLength"])
        engine = r["engine"] or "-"
        t = f"{r['elapsedMs'] / 1000.0:.1f} s"
        b = "match" if r["baselineMatched"] else "-"
        print(f"{r['file']:<{width}}  {r['outcome']:<13} {length:>3}  "
              f"{t:>8}  {engine:<11}  {b}")

    semantic = sum(r["outcome"] == "refactored" for r in rows)
    matched = sum(r["baselineMatched"] for r in rows)
    union = sum(r["outcome"] == "refactored" or r["baselineMatched"]
                for r in rows)
    errors = sum(r["outcome"] == "error" for r in rows)
    total = len(rows)
    print(f"semantic: {semantic}/{total}  baseline: {matched}/{total}  "
          f"union: {union}/{total}  errors: {errors}")

    lo, hi = args.values
    _write_json(args.json, {
        "files": rows,
        "summary": {"total": total, "semantic": semantic,
                    "baseline": matched, "union": union, "errors": errors},
        "boundsUsed": {"maxListLen": args.max_list_len, "values": [lo, hi]},
        "seed": args.seed,
        "mode": args.mode,
    })
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _complete_lists(prog: IRProgram, cand: Candidate) -> Candidate:
    """Treat list parameters a hand-written pipeline omits as untouched.

    A refactoring that never mentions p claims p keeps its pre-state; the
    check must test that claim rather than reject the shape.
    """
    named = {t.target for t in cand.terms}
    extra = tuple(identity_term(n) for n, ty in prog.params
                  if ty is Ty.LIST and n not in named)
    return Candidate(cand.terms + extra) if extra else cand


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        text = args.file.read_text()
        pipeline_text = args.pipeline.read_text()
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        _, prog = _load(text)
    except StreamifyError as e:
        print(f"error: {args.file}: {e}", file=sys.stderr)
        return EXIT_ERROR
    try:
        cand = _complete_lists(prog, Candidate.parse(pipeline_text))
    except StreamifyError as e:
        print(f"error: {args.pipeline}: {e}", file=sys.stderr)
        return EXIT_ERROR

    deadline = time.monotonic() + args.timeout
    try:
        res = verify(prog, cand, _bounds_of(args), mode=args.mode,
                     deadline=deadline)
    except NotRefactorableError as e:
        print(f"error: {e}; pre-state:", file=sys.stderr)
        for c in e.constructors:
            print(f"  {c}", file=sys.stderr)
        return EXIT_ERROR
    except StreamifyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR

    payload = {
        "inputPath": str(args.file),
        "pipelinePath": str(args.pipeline),
        "outcome": "pass" if res.ok else "fail",
        "statesChecked": res.states_checked,
        "counterexample": None if res.ok else res.counterexample.to_json(),
        "mode": args.mode,
    }
    _write_json(args.json, payload)
    if res.ok:
        print(f"PASS: equivalent on all {res.states_checked} pre-states")
        return EXIT_OK
    print(f"FAIL: rejected after {res.states_checked} pre-states")
    print(res.counterexample)
    return EXIT_NO


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that also reads `--values -1..1` style ranges.

    Stock argparse only treats plain negative numbers as option values, so
    a leading-dash range is misread as a flag. Subparsers inherit this
    class through add_subparsers.
    """

    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self._negative_number_matcher = re.compile(r"^-\d+(\.\.-?\d+)?$")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="streamify",
        description="Refactor MiniJ loops into verified Java stream pipelines.")
    sub = ap.add_subparsers(dest="command", required=True)

    ref = sub.add_parser("refactor", help="refactor one .minij file")
    ref.add_argument("file", type=Path)
    ref.add_argument("--emit", choices=("java", "pipeline", "both"),
                     default="both", help="what to print on success")
    _add_common(ref)
    ref.set_defaults(fn=cmd_refactor)

    cor = sub.add_parser("corpus", help="run a directory of .minij files")
    cor.add_argument("dir", type=Path, nargs="?", default=None,
                     help="directory to sweep (default: bundled corpus)")
    cor.add_argument("--jobs", type=int, default=1, metavar="N",
                     help="process files N at a time (default 1)")
    _add_common(cor)
    cor.set_defaults(fn=cmd_corpus)

    ver = sub.add_parser("verify",
                         help="check a pipeline file against a program")
    ver.add_argument("file", type=Path)
    ver.add_argument("pipeline", type=Path)
    _add_common(ver)
    ver.set_defaults(fn=cmd_verify)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; 2 is taken by "engine said no"
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(name)s: %(message)s")
    try:
        return args.fn(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
