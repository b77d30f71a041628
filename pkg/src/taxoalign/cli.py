"""Command-line interface covering the whole workflow.

Subcommands: check, explain, mir, worlds, cluster, reduce, gen, serve.
Exit codes: 0 success/consistent, 1 error, 2 inconsistent, 3 budget
exhausted.  All stdout and file output is byte-deterministic for a given
input; timing and solver statistics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import string
import sys
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from . import analysis, engine, viz
from .engine import Budget, BudgetExceededError
from .model import (
    Alignment,
    Articulation,
    ConstraintFlags,
    Taxonomy,
    World,
    alignment_to_json,
    diagnosis_to_json,
    mir_to_json,
    world_to_json,
)
from .parser import AlignmentSyntaxError, parse_alignment, serialize_alignment
from .relations import BaseRelation, RelationMask

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONSISTENT = 2
EXIT_BUDGET = 3

_BASE36 = string.digits + string.ascii_lowercase


class GenerationError(ValueError):
    pass


def generate_synthetic(depth: int, branch: int, pattern: str = "included",
                       seed: int = 0) -> Alignment:
    """Two identical balanced trees plus articulations forcing one world.

    ``congruent`` articulates each pair of corresponding leaves as equal.
    ``included`` additionally asserts each left leaf is included in the
    right-hand parent of its counterpart.  Either way the construction is
    verified to admit exactly one possible world before it is returned.
    """
    if depth < 1:
        raise GenerationError("depth must be at least 1")
    if branch < 2:
        raise GenerationError("branch must be at least 2")
    if branch > len(_BASE36):
        raise GenerationError(f"branch is limited to {len(_BASE36)}")
    if pattern not in ("included", "congruent"):
        raise GenerationError(f"unknown pattern {pattern!r}")
    if branch ** depth > 200_000:
        raise GenerationError("requested tree exceeds the size budget")

    names = ["n"]
    parent = {}
    frontier = ["n"]
    for _ in range(depth - 1):
        nxt = []
        for p in frontier:
            for i in range(branch):
                child = p + _BASE36[i]
                names.append(child)
                parent[child] = p
                nxt.append(child)
        frontier = nxt
    leaves = frontier

    t1 = Taxonomy(id=1, label="left", concepts=tuple(names), parent=dict(parent))
    t2 = Taxonomy(id=2, label="right", concepts=tuple(names), parent=dict(parent))

    arts: List[Articulation] = []

    def add(left: str, relation: BaseRelation, right: str) -> None:
        arts.append(
            Articulation(
                index=len(arts),
                left=f"1.{left}",
                right=f"2.{right}",
                mask=RelationMask.of(relation),
            )
        )

    if pattern == "included" and depth > 1:
        for leaf in leaves:
            add(leaf, BaseRelation.IS_INCLUDED_IN, parent[leaf])
    for leaf in leaves:
        add(leaf, BaseRelation.EQUALS, leaf)

    alignment = Alignment(t1, t2, tuple(arts))
    if not _verified_single_world(alignment):
        raise GenerationError("generated alignment is not single-world")
    return alignment


def _verified_single_world(alignment: Alignment) -> bool:
    grid = engine.build_grid(alignment)
    if grid.cell_count <= 2_000:
        result = engine.enumerate_worlds(alignment, limit=2)
        return len(result.worlds) == 1 and not result.truncated
    return engine.has_unique_inhabitation(alignment)


# ---------------------------------------------------------------------------
# command helpers


def _dump_json(obj, out: TextIO) -> None:
    out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_alignment(path: str, coverage: bool, err: TextIO) -> Optional[Alignment]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        err.write(f"error: cannot read {path}: {e}\n")
        return None
    try:
        return parse_alignment(text, coverage=coverage)
    except AlignmentSyntaxError as e:
        for issue in e.issues:
            err.write(f"{path}:{issue}\n")
        return None


def _worlds_or_exit(alignment: Alignment, limit: Optional[int], err: TextIO):
    result = engine.enumerate_worlds(alignment, limit=limit)
    err.write(f"solver: {json.dumps(result.stats.to_json(), sort_keys=True)}\n")
    return result


def _cmd_check(args, out: TextIO, err: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    result = engine.check_consistency(alignment)
    err.write(f"solver: {json.dumps(result.stats.to_json(), sort_keys=True)}\n")
    if args.json:
        _dump_json({"consistent": result.consistent}, out)
    else:
        out.write("consistent\n" if result.consistent else "inconsistent\n")
    if result.consistent:
        return EXIT_OK
    diagnosis = analysis.diagnose(alignment)
    by_index = {a.index: a for a in alignment.articulations}
    if not args.json:
        out.write("minimal unsatisfiable articulation set:\n")
        for idx in diagnosis.mus:
            out.write(f"  [{idx}] {by_index[idx].text()}\n")
    return EXIT_INCONSISTENT


def _cmd_explain(args, out: TextIO, err: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    try:
        diagnosis = analysis.diagnose(alignment)
    except analysis.ConsistentAlignmentError:
        if args.json:
            _dump_json({"consistent": True}, out)
        else:
            out.write("alignment is consistent; nothing to explain\n")
        return EXIT_OK
    if args.json:
        _dump_json(diagnosis_to_json(diagnosis), out)
        return EXIT_OK
    by_index = {a.index: a for a in alignment.articulations}
    out.write("alignment is inconsistent\n")
    out.write("white-box explanation (minimal unsatisfiable articulation set):\n")
    for idx in diagnosis.mus:
        out.write(f"  [{idx}] {by_index[idx].text()}\n")
    for fact in analysis.structural_facts(alignment, diagnosis.mus):
        out.write(f"  given {fact}\n")
    out.write("black-box repair suggestions (single removals that restore consistency):\n")
    for idx in diagnosis.repairs:
        out.write(f"  remove [{idx}] {by_index[idx].text()}\n")
    if diagnosis.all_minimal_conflicts is not None:
        out.write(
            f"all minimal conflicts: "
            f"{json.dumps([list(c) for c in diagnosis.all_minimal_conflicts])}\n"
        )
    return EXIT_OK


def _cmd_mir(args, out: TextIO, err: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    result = _worlds_or_exit(alignment, args.limit, err)
    if not result.worlds:
        err.write("error: alignment is inconsistent, MIR is undefined\n")
        return EXIT_INCONSISTENT
    table = analysis.mir(result.worlds)
    if args.json:
        _dump_json(mir_to_json(table), out)
    else:
        out.write(analysis.mir_to_csv(table))
    return EXIT_OK


def _cmd_worlds(args, out: TextIO, err: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    result = _worlds_or_exit(alignment, args.limit, err)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {
        "truncated": result.truncated,
        "worlds": [world_to_json(w) for w in result.worlds],
    }
    (outdir / "worlds.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    for w in result.worlds:
        rcg = viz.build_rcg(w, alignment)
        (outdir / f"world_{w.world_id}.dot").write_text(viz.rcg_to_dot(rcg), encoding="utf-8")
    out.write(f"{len(result.worlds)} world(s) written to {args.out_dir}\n")
    if result.truncated:
        out.write("world list truncated at the requested limit\n")
    return EXIT_OK if result.worlds else EXIT_INCONSISTENT


def _cmd_cluster(args, out: TextIO, err: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    result = _worlds_or_exit(alignment, args.limit, err)
    if not result.worlds:
        err.write("error: alignment is inconsistent, no worlds to cluster\n")
        return EXIT_INCONSISTENT
    dot, csv_text = viz.cluster_to_dot(result.worlds)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "cluster.dot").write_text(dot, encoding="utf-8")
    (outdir / "distances.csv").write_text(csv_text, encoding="utf-8")
    out.write(f"cluster graph over {len(result.worlds)} world(s) written to {args.out_dir}\n")
    return EXIT_OK


def _cmd_reduce(args, out: TextIO, err: TextIO, stdin: TextIO) -> int:
    alignment = _load_alignment(args.file, not args.no_coverage, err)
    if alignment is None:
        return EXIT_ERROR
    result = _worlds_or_exit(alignment, args.limit, err)
    if not result.worlds:
        err.write("error: alignment is inconsistent\n")
        return EXIT_INCONSISTENT
    session = analysis.ReductionSession.start(alignment, result.worlds)
    while True:
        question = analysis.next_question(session)
        if question is None:
            break
        out.write(f"{len(session.surviving)} possible worlds remain\n")
        out.write(f"How are {question.pair[0]} and {question.pair[1]} related?\n")
        for i, (relation, count) in enumerate(question.candidates, start=1):
            out.write(
                f"  {i}) {question.pair[0]} {relation.symbol} {question.pair[1]}"
                f"   [{count} worlds]\n"
            )
        out.write("  s) stop\n> ")
        out.flush()
        line = stdin.readline()
        if not line or line.strip() in ("s", "stop", "q"):
            break
        try:
            pick = int(line.strip())
            relation = question.candidates[pick - 1][0]
        except (ValueError, IndexError):
            out.write("please answer with one of the listed numbers\n")
            continue
        session = analysis.apply_answer(session, question.pair, RelationMask.of(relation))
    out.write(f"reduced to {len(session.surviving)} world(s): "
              f"{' '.join(str(i) for i in session.surviving)}\n")
    return EXIT_OK


def _cmd_gen(args, out: TextIO, err: TextIO) -> int:
    try:
        alignment = generate_synthetic(args.depth, args.branch, args.pattern, args.seed)
    except GenerationError as e:
        err.write(f"error: {e}\n")
        return EXIT_ERROR
    text = serialize_alignment(alignment)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        out.write(f"alignment written to {args.out}\n")
    else:
        out.write(text)
    return EXIT_OK


def _cmd_serve(args, out: TextIO, err: TextIO) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir=args.data_dir,
        static_dir=args.static_dir,
        allow_origins=tuple(args.allow_origin or ()),
    )
    out.write(f"serving on port {args.port}\n")
    out.flush()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-coverage", action="store_true",
                        help="disable the parent-coverage constraint")
    common.add_argument("--seed", type=int, default=0, help="generator seed")
    common.add_argument("--json", action="store_true", help="machine-readable output")

    parser = argparse.ArgumentParser(
        prog="taxoalign",
        description="Align two taxonomies under RCC-5 articulations: check, "
                    "explain, merge, reduce ambiguity, visualize.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide consistency")
    p.add_argument("file")

    p = sub.add_parser("explain", parents=[common], help="diagnose an inconsistency")
    p.add_argument("file")

    p = sub.add_parser("mir", parents=[common], help="maximally informative relations")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=None, help="world enumeration limit")

    p = sub.add_parser("worlds", parents=[common], help="enumerate possible worlds")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("-o", "--out-dir", default="out")

    p = sub.add_parser("cluster", parents=[common], help="world distance network")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("-o", "--out-dir", default="out")

    p = sub.add_parser("reduce", parents=[common], help="interactive ambiguity reduction")
    p.add_argument("file")
    p.add_argument("--limit", type=int, default=None)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic benchmark")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--branch", type=int, default=2)
    p.add_argument("--pattern", choices=["included", "congruent"], default="included")
    p.add_argument("-o", "--out", default=None)

    p = sub.add_parser("serve", parents=[common], help="start the HTTP session service")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", default="sessions")
    p.add_argument("--static-dir", default=None,
                   help="serve a built web UI from this directory")
    p.add_argument("--allow-origin", action="append", default=None,
                   help="CORS origin for a separately hosted UI (repeatable)")

    return parser


def run(
    argv: Sequence[str],
    stdin: Optional[TextIO] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    """Entry point; returns the process exit code."""
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    inp = stdin or sys.stdin
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    try:
        if args.command == "check":
            return _cmd_check(args, out, err)
        if args.command == "explain":
            return _cmd_explain(args, out, err)
        if args.command == "mir":
            return _cmd_mir(args, out, err)
        if args.command == "worlds":
            return _cmd_worlds(args, out, err)
        if args.command == "cluster":
            return _cmd_cluster(args, out, err)
        if args.command == "reduce":
            return _cmd_reduce(args, out, err, inp)
        if args.command == "gen":
            return _cmd_gen(args, out, err)
        if args.command == "serve":
            return _cmd_serve(args, out, err)
        err.write(f"error: unknown command {args.command}\n")
        return EXIT_ERROR
    except BudgetExceededError as e:
        err.write(f"budget exceeded: {e}\n")
        return EXIT_BUDGET


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
