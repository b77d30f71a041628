#!/usr/bin/env python3
"""Walk the bundled example through the whole workflow, printing each stage:
consistency, diagnosis, repair, possible worlds, MIR, consensus, ambiguity
reduction, and DOT output files.
"""

import argparse
from pathlib import Path

from taxoalign import analysis, viz
from taxoalign.datasets import demo_alignment
from taxoalign.engine import check_consistency, enumerate_worlds
from taxoalign.relations import RelationMask


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--out-dir", default="demo_out")
    args = ap.parse_args()

    alignment = demo_alignment()
    by_index = {a.index: a for a in alignment.articulations}
    print("articulations:")
    for a in alignment.articulations:
        print(f"  [{a.index}] {a.text()}")

    print("\nconsistent:", check_consistency(alignment).consistent)
    diagnosis = analysis.diagnose(alignment)
    print("minimal unsatisfiable subset:", [by_index[i].text() for i in diagnosis.mus])
    print("repair suggestions:", [by_index[i].text() for i in diagnosis.repairs])

    keep = [a.index for a in alignment.articulations if a.index not in diagnosis.repairs]
    repaired = alignment.restricted_to(keep)
    print("\nafter removing the suggestion, consistent:",
          check_consistency(repaired).consistent)

    worlds = enumerate_worlds(repaired).worlds
    print(f"possible worlds: {len(worlds)}")
    table = analysis.mir(worlds)
    print("MIR for (1.D, 2.A):", table.mask("1.D", "2.A").text(long=False))
    fixed = analysis.consensus(table)
    print(f"consensus (true in all worlds): {len(fixed)} of {len(table.entries)} pairs")

    session = analysis.ReductionSession.start(repaired, worlds)
    while True:
        question = analysis.next_question(session)
        if question is None:
            break
        relation, count = question.candidates[0]
        print(f"question on {question.pair}: taking "
              f"{question.pair[0]} {relation.symbol} {question.pair[1]} "
              f"keeps {count} of {len(session.surviving)}")
        session = analysis.apply_answer(session, question.pair, RelationMask.of(relation))
    print("surviving world ids after always taking the first answer:",
          list(session.surviving))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for w in worlds:
        (out / f"world_{w.world_id}.dot").write_text(
            viz.rcg_to_dot(viz.build_rcg(w, repaired)), encoding="utf-8")
    dot, csv_text = viz.cluster_to_dot(worlds)
    (out / "cluster.dot").write_text(dot, encoding="utf-8")
    (out / "distances.csv").write_text(csv_text, encoding="utf-8")
    print(f"\nwrote {len(worlds)} RCG files, cluster.dot and distances.csv to {out}/")


if __name__ == "__main__":
    main()
