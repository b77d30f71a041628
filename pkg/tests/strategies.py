"""Random alignment generators shared by property tests and the acceptance suite."""

from __future__ import annotations

import random
from typing import Optional

from hypothesis import strategies as st

from taxoalign.model import Alignment, Articulation, ConstraintFlags, Taxonomy
from taxoalign.relations import RelationMask


def random_taxonomy(rng: random.Random, tid: int, max_concepts: int = 4,
                    max_leaves: int = 3) -> Taxonomy:
    n = rng.randint(1, max_concepts)
    names = [f"{'XY'[tid - 1]}{i}" for i in range(n)]
    parent = {}
    for i, name in enumerate(names[1:], start=1):
        parent[name] = names[rng.randrange(i)]
    t = Taxonomy(id=tid, label=f"t{tid}", concepts=tuple(names), parent=parent)
    if len(t.leaves()) > max_leaves:
        # fall back to a chain, which has a single leaf
        parent = {name: names[i - 1] for i, name in enumerate(names) if i}
        t = Taxonomy(id=tid, label=f"t{tid}", concepts=tuple(names), parent=parent)
    return t


def random_alignment(rng: random.Random, max_articulations: int = 4) -> Alignment:
    t1 = random_taxonomy(rng, 1)
    t2 = random_taxonomy(rng, 2)
    n_arts = rng.choices(
        range(max_articulations + 1),
        weights=[1] + [3] * max_articulations,
    )[0]
    arts = tuple(
        Articulation(
            i,
            f"1.{rng.choice(t1.concepts)}",
            f"2.{rng.choice(t2.concepts)}",
            RelationMask(rng.randint(1, 31)),
        )
        for i in range(n_arts)
    )
    return Alignment(t1, t2, arts, ConstraintFlags(coverage=rng.random() < 0.8))


def random_inconsistent_alignment(rng: random.Random,
                                  max_tries: int = 1000) -> Optional[Alignment]:
    from taxoalign.engine import check_consistency

    for _ in range(max_tries):
        a = random_alignment(rng)
        if a.articulations and not check_consistency(a).consistent:
            return a
    return None


# hypothesis strategies

masks = st.integers(min_value=1, max_value=31).map(RelationMask)


@st.composite
def alignments(draw) -> Alignment:
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_alignment(random.Random(seed))


@st.composite
def nonempty_subsets(draw, universe_size: int = 6) -> frozenset:
    bits = draw(st.integers(min_value=1, max_value=(1 << universe_size) - 1))
    return frozenset(i for i in range(universe_size) if bits >> i & 1)
