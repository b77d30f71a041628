#!/usr/bin/env python3
"""Measure consistency-check and merge times on synthetic balanced trees.

Generates two identical balanced taxonomies articulated so that exactly one
possible world exists, then times the consistency check and the full world
enumeration (merge) at increasing depth.
"""

import argparse
import time

from taxoalign.cli import generate_synthetic
from taxoalign.engine import check_consistency, enumerate_worlds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-depth", type=int, default=8)
    ap.add_argument("--branch", type=int, default=2)
    ap.add_argument("--pattern", choices=["included", "congruent"], default="included")
    args = ap.parse_args()

    print(f"{'depth':>5} {'concepts':>9} {'gen_s':>8} {'check_s':>8} {'merge_s':>8} {'worlds':>7}")
    for depth in range(2, args.max_depth + 1):
        t0 = time.perf_counter()
        alignment = generate_synthetic(depth, args.branch, args.pattern)
        t_gen = time.perf_counter() - t0

        t0 = time.perf_counter()
        result = check_consistency(alignment)
        t_check = time.perf_counter() - t0
        assert result.consistent

        t0 = time.perf_counter()
        worlds = enumerate_worlds(alignment)
        t_merge = time.perf_counter() - t0

        n = len(alignment.taxonomy1.concepts)
        print(f"{depth:>5} {n:>9} {t_gen:>8.2f} {t_check:>8.2f} {t_merge:>8.2f} "
              f"{len(worlds.worlds):>7}")


if __name__ == "__main__":
    main()
